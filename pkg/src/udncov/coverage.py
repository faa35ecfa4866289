"""Coverage probability and area spectral efficiency.

Each public function is one analytic route to P[SIR > theta].  The general
route integrates the Laplace-transform derivative sums over the serving
distance; the others are closed forms or cheaper reformulations valid on a
sub-domain, and are cross-checked against the general route in the tests.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import specfun
from .channel import (AllNlos, FadingSpec, LosModel, PathlossParams, Step, los_breakpoints,
                      los_probability)
from .laplace import (INNER, AssociationPolicy, LaplaceContext,
                      derivative_sum_from_coefficients, laplace_coefficients,
                      laplace_general)
from .quadrature import integrate, integrate_to_inf
from .specfun import Tolerances

OUTER = Tolerances(rel_tol=1e-8, abs_tol=1e-12)


class Method(Enum):
    GENERAL_QUADRATURE = "analytic"
    ALZER_BOUND = "bound"
    CLOSED_FORM = "closed_form"
    SIMPLIFIED_3GPP = "simplified_3gpp"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class NetworkConfig:
    lam: float
    theta: float
    pathloss: PathlossParams
    fading: FadingSpec = FadingSpec()
    los_model: LosModel = AllNlos()
    policy: AssociationPolicy = AssociationPolicy.CLOSEST

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("BS density must be positive")
        if not self.theta > 0:
            raise ValueError("SIR threshold must be positive")

    def context(self, r: float) -> LaplaceContext:
        return LaplaceContext(self.lam, self.policy, r, self.pathloss, self.fading, self.los_model)


@dataclass(frozen=True)
class CoverageResult:
    value: float
    method: Method
    err_estimate: float = 0.0

    def __post_init__(self):
        if not -1e-12 <= self.value <= 1 + 1e-12:
            raise ValueError(f"coverage {self.value} outside [0, 1]")

    def __float__(self):
        return float(self.value)


def _inner_tol(tol: Tolerances) -> Tolerances:
    return Tolerances(rel_tol=min(INNER.rel_tol, tol.rel_tol * 1e-2), abs_tol=INNER.abs_tol)


def _outer(cfg: NetworkConfig, branch, tol: Tolerances):
    """Integrate branch(r) * serving density over r in [0, inf)."""
    dens_scale = 1 / math.sqrt(math.pi * cfg.lam)

    def f(r):
        return np.array([branch(x) for x in r]) * cfg.policy.serving_density(r, cfg.lam)

    return integrate_to_inf(f, 0.0, scale=dens_scale, breakpoints=los_breakpoints(cfg.los_model),
                            rel_tol=tol.rel_tol, abs_tol=tol.abs_tol)


def _serving_s(cfg: NetworkConfig, r: float, los: bool) -> float:
    d2 = r * r + cfg.pathloss.bs_height ** 2
    ell_inv = d2 ** (0.5 * cfg.pathloss.alpha(los))
    return (cfg.fading.m if los else 1) * cfg.theta * ell_inv


def _mixture_branch(cfg: NetworkConfig, conditional):
    """r -> p(r) * conditional(r, LOS) + (1 - p(r)) * conditional(r, NLOS)."""
    h = cfg.pathloss.bs_height

    def branch(r):
        p = float(los_probability(cfg.los_model, r, h))
        out = 0.0
        if p > 0:
            out += p * conditional(r, True)
        if p < 1:
            out += (1 - p) * conditional(r, False)
        return out

    return branch


def coverage_general(cfg: NetworkConfig, tol: Tolerances = OUTER) -> CoverageResult:
    """Coverage by outer quadrature of the Laplace-transform derivative sums.

    For a serving link of type Q at distance r the conditional coverage is
    sum_{k<N} (-s)^k/k! L^(k)(s) at s = m_Q theta / l_Q(r), with N = n_t m
    (LOS) or n_t (NLOS).  With strongest association the result is exact for
    theta >= 1 only; below that it is the sum over BSs of the per-BS event.
    """
    inner = _inner_tol(tol)

    def conditional(r, los):
        s = _serving_s(cfg, r, los)
        n = cfg.fading.serving_shape(los)
        c = laplace_coefficients(cfg.context(r), s, n - 1, inner)
        return derivative_sum_from_coefficients(c)

    val, err = _outer(cfg, _mixture_branch(cfg, conditional), tol)
    return _result(val, err, Method.GENERAL_QUADRATURE, inner)


def _result(val, err, method, inner: Tolerances | None = None):
    if inner is not None:
        err += inner.rel_tol * abs(val)
    return CoverageResult(float(min(max(val, 0.0), 1.0)), method, float(err))


def alzer_sum(transform, n: int, z: float) -> float:
    """sum_{i=1}^n (-1)^(i-1) C(n, i) L(i Gamma(n+1)^(-1/n) z), an upper bound on
    P[Gamma(n, 1) > z I] for n > 1 and equal to it for n = 1."""
    c = math.exp(-math.lgamma(n + 1) / n)
    return math.fsum((-1) ** (i - 1) * math.comb(n, i) * transform(i * c * z)
                     for i in range(1, n + 1))


def coverage_alzer_upper(cfg: NetworkConfig, tol: Tolerances = OUTER) -> CoverageResult:
    """Derivative-free upper bound: each derivative sum replaced by the Alzer sum."""
    inner = _inner_tol(tol)

    def conditional(r, los):
        ctx = cfg.context(r)
        n = cfg.fading.serving_shape(los)
        z = _serving_s(cfg, r, los)
        if n == 1:
            return laplace_general(ctx, z, inner)
        return alzer_sum(lambda s: laplace_general(ctx, s, inner), n, z)

    val, err = _outer(cfg, _mixture_branch(cfg, conditional), tol)
    # alternating sum: inner errors add up over its terms
    n_max = cfg.fading.serving_shape(True)
    err += inner.rel_tol * 2.0 ** n_max * abs(val)
    return CoverageResult(float(min(max(val, 0.0), 1.0)), Method.ALZER_BOUND, float(err))


def _geometric(lo: float, hi: float, base: float) -> list:
    """Breakpoints base * 4^k inside (lo, hi), so wide panels still resolve features near ``base``."""
    out = []
    x = base
    while x < hi and len(out) < 60:
        if x > lo:
            out.append(x)
        x *= 4.0
    return out


def _step_coefficients(cfg: NetworkConfig, nu: float, s: float, order: int, inner: Tolerances):
    """Derivative coefficients of the step-model transform in split form.

    log L~ = log L_NLOS over [nu, inf) plus a LOS-minus-NLOS correction
    integrated over [nu, max(nu, D)] only.
    """
    model = cfg.los_model
    # closest policy with serving distance nu puts the lower limit at nu
    nlos_ctx = LaplaceContext(cfg.lam, AssociationPolicy.CLOSEST, nu, cfg.pathloss,
                              cfg.fading, AllNlos())
    c = laplace_coefficients(nlos_ctx, s, order, inner)
    if nu >= model.d or s == 0:
        return c
    m = cfg.fading.m
    h2 = cfg.pathloss.bs_height ** 2
    j = np.arange(1, order + 1)
    binom = np.array([math.comb(m + k - 1, k) for k in j], dtype=float)

    def f(t):
        d2 = t * t + h2
        gl = m * d2 ** (0.5 * cfg.pathloss.alpha_los)
        gn = d2 ** (0.5 * cfg.pathloss.alpha_nlos)
        sl, ql = s / (gl + s), gl / (gl + s)
        sn, qn = s / (gn + s), gn / (gn + s)
        keep = ql ** m
        out = np.empty((t.size, order + 1))
        # (1 - ql^m) - sn: near the UE both terms approach 1, far away both vanish,
        # so take whichever form keeps the operands small
        out[:, 0] = np.where(sn > 0.5, qn - keep, -np.expm1(m * np.log1p(-sl)) - sn)
        out[:, 1:] = binom * sl[:, None] ** j * keep[:, None] - sn[:, None] ** j * qn[:, None]
        return out * t[:, None]

    feature = max(s ** (1 / cfg.pathloss.alpha_los), nu, 1e-6)
    corr, _ = integrate(f, nu, model.d, breakpoints=_geometric(nu, model.d, feature),
                        rel_tol=inner.rel_tol, abs_tol=inner.abs_tol)
    return c + 2 * np.pi * cfg.lam * corr


def coverage_simplified_3gpp(cfg: NetworkConfig, tol: Tolerances = OUTER) -> CoverageResult:
    """Coverage under the step LOS model in split form.

    Serving BSs closer than D are LOS, the rest NLOS, so the outer integral
    splits at D; the interference transform is the NLOS one corrected over
    the LOS region [nu, D].
    """
    if not isinstance(cfg.los_model, Step):
        raise ValueError("simplified form needs a Step LOS model")
    inner = _inner_tol(tol)
    d = cfg.los_model.d
    lam = cfg.lam

    def branch(los):
        n = cfg.fading.serving_shape(los)

        def g(r):
            out = np.empty(r.size)
            for i, x in enumerate(r):
                s = _serving_s(cfg, x, los)
                c = _step_coefficients(cfg, cfg.policy.lower_limit(x), s, n - 1, inner)
                out[i] = derivative_sum_from_coefficients(c)
            return out * cfg.policy.serving_density(r, lam)
        return g

    scale = 1 / math.sqrt(math.pi * lam)
    los_val, los_err = integrate(branch(True), 0.0, d, breakpoints=_geometric(0.0, d, 0.25 * scale),
                                 rel_tol=tol.rel_tol, abs_tol=tol.abs_tol)
    scale = max(scale, d)
    nlos_val, nlos_err = integrate_to_inf(branch(False), d, scale=scale,
                                          rel_tol=tol.rel_tol, abs_tol=tol.abs_tol)
    return _result(los_val + nlos_val, los_err + nlos_err, Method.SIMPLIFIED_3GPP, inner)


def psi(k: int, theta: float, m: int, alpha: float) -> float:
    """psi_k(theta, m) = |(-2/alpha)_k| * (tail of the Pfaff series of eta(m theta, m, 1) from term k)."""
    d = 2.0 / alpha
    # |(-d)_k| = d * (1-d)_{k-1}
    log_poch = math.log(d) + math.lgamma(k - d) - math.lgamma(1 - d)
    return math.exp(log_poch) * specfun.eta_tail(k, theta, m, alpha)


def coverage_los_closed(theta: float, m: int, alpha: float,
                        policy: AssociationPolicy) -> float:
    """All-LOS Nakagami-m coverage, ground-level BSs, one pathloss exponent.

    closest:   (1/eta) (1 + sum_{k=1}^{m-1} sum_{j=1}^k j!/k! B_{k,j}(psi_1/eta, ...))
    strongest: 1 / (2 zeta(1) theta^(2/alpha)), whatever m.
    """
    if not theta > 0:
        raise ValueError("SIR threshold must be positive")
    if m < 1 or int(m) != m:
        raise ValueError("m must be a positive integer")
    if policy is AssociationPolicy.STRONGEST:
        return 1.0 / (2 * specfun.zeta(1, alpha) * theta ** (2 / alpha))
    e = specfun.eta(m * theta, m, 1.0, alpha)
    if m == 1:
        return 1.0 / e
    x = [psi(k, theta, m, alpha) / e for k in range(1, m)]
    table = specfun.bell_incomplete_table(m - 1, x)
    total = 1.0
    for k in range(1, m):
        inv_kfact = 1.0 / math.factorial(k)
        total += sum(math.factorial(j) * inv_kfact * table[k][j] for j in range(1, k + 1))
    return total / e


def coverage_nlos_closed(theta: float, alpha: float, policy: AssociationPolicy) -> float:
    """Rayleigh coverage with ground-level BSs: 1/eta(theta,1,1) or 1/(2 zeta(1) theta^(2/alpha))."""
    return coverage_los_closed(theta, 1, alpha, policy)


def coverage_elevated(theta: float, lam: float, h: float, alpha: float,
                      policy: AssociationPolicy, tol: Tolerances = OUTER) -> float:
    """Rayleigh coverage with BSs at height h, one pathloss exponent.

    closest:   exp(-pi lam h^2 (eta(theta,1,1) - 1)) / eta(theta,1,1)
    strongest: 2 pi lam int_h^inf exp(-pi lam h^2 (eta(theta r^alpha, 1, h) - 1)) r dr
    """
    if not theta > 0 or not lam > 0:
        raise ValueError("theta and lambda must be positive")
    if h < 0:
        raise ValueError("BS height must be non-negative")
    if policy is AssociationPolicy.CLOSEST:
        e = specfun.eta(theta, 1, 1.0, alpha)
        return math.exp(-math.pi * lam * h * h * (e - 1)) / e
    if h == 0:
        return coverage_nlos_closed(theta, alpha, policy)

    def f(r):
        ex = specfun.eta(theta * r**alpha, 1, h, alpha)
        return np.exp(-math.pi * lam * h * h * (ex - 1)) * r

    val, _ = integrate_to_inf(f, h, scale=1 / math.sqrt(math.pi * lam),
                              rel_tol=tol.rel_tol, abs_tol=tol.abs_tol)
    return min(2 * math.pi * lam * val, 1.0)


def optimal_density(theta: float, h: float, alpha: float) -> tuple:
    """(lambda_opt, ASE_max) for closest association with elevated Rayleigh BSs."""
    if not h > 0:
        raise ValueError("optimal density diverges at h = 0")
    e = specfun.eta(theta, 1, 1.0, alpha)
    lam_opt = 1.0 / (math.pi * h * h * (e - 1))
    ase_max = math.exp(-1) / (math.pi * h * h * e * (e - 1)) * math.log2(1 + theta)
    return lam_opt, ase_max


def ase(theta: float, lam: float, p_cov: float) -> float:
    """Area spectral efficiency lam * P_cov * log2(1 + theta), bps/Hz/m^2."""
    if not 0 <= p_cov <= 1:
        raise ValueError("coverage must lie in [0, 1]")
    return lam * p_cov * math.log2(1 + theta)


def interference_term(i: int, lam: float, h: float, alpha: float) -> float:
    """E[l(r_i)] for the i-th nearest BS: (pi lam)^i h^(2i-alpha) U(i, i+1-alpha/2, pi lam h^2)."""
    z = math.pi * lam * h * h
    log_u = specfun.log_tricomi_u(i, i + 1 - alpha / 2, z)
    return math.exp(i * math.log(math.pi * lam) + (2 * i - alpha) * math.log(h) + log_u)


def nearest_interference(lam: float, h: float, alpha: float) -> float:
    """pi lam h^(2-alpha) e^z E_{alpha/2}(z), z = pi lam h^2."""
    z = math.pi * lam * h * h
    return math.pi * lam * h ** (2 - alpha) * math.exp(z) * specfun.exp_integral(alpha / 2, z)


def expected_interference_strongest(lam: float, h: float, alpha: float,
                                    n_terms: int | None = None) -> tuple:
    """(series_bound, nearest_term) for the mean interference under strongest association.

    The bound is sum_{i>=1} E[l(r_i)].  Its terms decay only like i^(-alpha/2),
    so the full sum is returned through its closed form
    2 pi lam h^(2-alpha) / (alpha - 2) (the sum of the i-th nearest-distance
    pdfs is the intensity 2 pi lam r).  Pass ``n_terms`` for the partial sum of
    the first n_terms series terms instead.
    """
    if not h > 0:
        raise ValueError("expected interference needs h > 0")
    specfun._check_alpha(alpha)
    if n_terms is None:
        bound = 2 * math.pi * lam * h ** (2 - alpha) / (alpha - 2)
    else:
        if n_terms < 1:
            raise ValueError("n_terms must be >= 1")
        bound = math.fsum(interference_term(i, lam, h, alpha) for i in range(1, n_terms + 1))
    return bound, nearest_interference(lam, h, alpha)
