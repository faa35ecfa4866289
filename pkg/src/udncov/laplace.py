"""Laplace transform of the aggregate interference and its derivatives.

The transform is evaluated through the integrals

    c_0 = -log L(s)
    c_j = (-s)^j / j! * d^j/ds^j log L(s),   j >= 1,

which are all non-negative.  With sigma = s / (m d^a + s) for LOS and
s / (d^a + s) for NLOS links (d the 3-d link distance),

    c_0 = 2 pi lam int p (1 - (1 - sL)^m) + (1 - p) sN           t dt
    c_j = 2 pi lam int p C(m+j-1, j) sL^j (1 - sL)^m + (1 - p) sN^j (1 - sN)  t dt

over t in [nu, inf).  The derivative sums that appear in the coverage
formulas are then L(s) * sum_k B_k(y)/k! with y_j = j! c_j.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import specfun
from .channel import (AllLos, AllNlos, FadingSpec, LosModel, PathlossParams,
                      los_breakpoints, los_probability)
from .quadrature import integrate, integrate_to_inf
from .specfun import Tolerances

MAX_DERIVATIVE_ORDER = 63
INNER = Tolerances(rel_tol=1e-10, abs_tol=1e-14)


class AssociationPolicy(Enum):
    CLOSEST = "closest"
    STRONGEST = "strongest"

    def lower_limit(self, r: float) -> float:
        """Inner radius of the interference field given a serving distance r."""
        return r if self is AssociationPolicy.CLOSEST else 0.0

    def serving_density(self, r, lam: float):
        """Distance pdf (closest) or intensity measure (strongest) of the serving BS."""
        r = np.asarray(r, dtype=float)
        if self is AssociationPolicy.CLOSEST:
            return 2 * np.pi * lam * r * np.exp(-np.pi * lam * r * r)
        return 2 * np.pi * lam * r


@dataclass(frozen=True)
class LaplaceContext:
    lam: float
    policy: AssociationPolicy
    serving_distance: float
    pathloss: PathlossParams
    fading: FadingSpec
    los_model: LosModel

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("BS density must be positive")
        if self.serving_distance < 0:
            raise ValueError("serving distance must be non-negative")

    @property
    def nu(self) -> float:
        return self.policy.lower_limit(self.serving_distance)


class UnsupportedOrderError(ValueError):
    pass


def _sigmas(t, s, ctx: LaplaceContext):
    h2 = ctx.pathloss.bs_height ** 2
    d2 = t * t + h2
    m = ctx.fading.m
    dl = d2 ** (0.5 * ctx.pathloss.alpha_los)
    dn = d2 ** (0.5 * ctx.pathloss.alpha_nlos)
    return s / (m * dl + s), s / (dn + s)


def _inner_scale(ctx: LaplaceContext, s: float) -> float:
    m = ctx.fading.m
    pl = ctx.pathloss
    knee = max((s / m) ** (1 / pl.alpha_los), s ** (1 / pl.alpha_nlos))
    return max(knee, ctx.nu, pl.bs_height, 1e-6)


def laplace_coefficients(ctx: LaplaceContext, s: float, order: int = 0,
                         tol: Tolerances = INNER, return_error: bool = False):
    """[c_0, c_1, ..., c_order] for the transform at ``s`` (see module docstring)."""
    if s < 0:
        raise ValueError("s must be non-negative")
    if order > MAX_DERIVATIVE_ORDER:
        raise UnsupportedOrderError(
            f"derivative order {order} exceeds the supported maximum {MAX_DERIVATIVE_ORDER}")
    if s == 0:
        out = np.zeros(order + 1)
        return (out, np.zeros(order + 1)) if return_error else out

    m = ctx.fading.m
    j = np.arange(1, order + 1)
    binom = np.array([math.comb(m + k - 1, k) for k in j], dtype=float)
    model = ctx.los_model
    h = ctx.pathloss.bs_height
    only_los = isinstance(model, AllLos)
    only_nlos = isinstance(model, AllNlos)

    def f(t):
        sl, sn = _sigmas(t, s, ctx)
        out = np.empty((t.size, order + 1))
        if only_nlos:
            out[:, 0] = sn
            out[:, 1:] = sn[:, None] ** j * (1 - sn)[:, None]
        else:
            los_keep = np.exp(m * np.log1p(-sl))
            los0 = -np.expm1(m * np.log1p(-sl))
            losj = binom * sl[:, None] ** j * los_keep[:, None]
            if only_los:
                out[:, 0] = los0
                out[:, 1:] = losj
            else:
                p = los_probability(model, t, h)[:, None]
                out[:, :1] = p * los0[:, None] + (1 - p) * sn[:, None]
                out[:, 1:] = p * losj + (1 - p) * (sn[:, None] ** j * (1 - sn)[:, None])
        return out * t[:, None]

    val, err = integrate_to_inf(
        f, ctx.nu, scale=_inner_scale(ctx, s), breakpoints=los_breakpoints(model),
        decay=ctx.pathloss.alpha_los - 1, rel_tol=tol.rel_tol, abs_tol=tol.abs_tol)
    k = 2 * np.pi * ctx.lam
    if return_error:
        return k * val, k * err
    return k * val


def laplace_general(ctx: LaplaceContext, s: float, tol: Tolerances = INNER) -> float:
    """E[exp(-s I)] under the LOS/NLOS mixture of ``ctx.los_model``."""
    return math.exp(-laplace_coefficients(ctx, s, 0, tol)[0])


def laplace_pure(ctx: LaplaceContext, s: float, los: bool, tol: Tolerances = INNER) -> float:
    """Transform when every interferer is LOS (Nakagami-m) or every one is NLOS (Rayleigh)."""
    if s < 0:
        raise ValueError("s must be non-negative")
    if s == 0:
        return 1.0
    m = ctx.fading.m if los else 1
    alpha = ctx.pathloss.alpha(los)
    h2 = ctx.pathloss.bs_height ** 2

    def f(t):
        ell = (t * t + h2) ** (-0.5 * alpha)
        return -np.expm1(-m * np.log1p((s / m) * ell)) * t

    pure = replace(ctx, los_model=AllLos() if los else AllNlos())
    val, _ = integrate_to_inf(f, ctx.nu, scale=_inner_scale(pure, s), decay=alpha - 1,
                              rel_tol=tol.rel_tol, abs_tol=tol.abs_tol)
    return math.exp(-2 * np.pi * ctx.lam * val)


def _require_single_slope(ctx: LaplaceContext):
    if not ctx.pathloss.is_single_slope:
        raise ValueError("closed form needs alpha_los == alpha_nlos")


def laplace_closed_single_slope(ctx: LaplaceContext, s: float, los: bool) -> float:
    """Closed forms for ground-level BSs and one pathloss exponent.

    closest: exp(-pi lam r^2 (eta(s, m, r) - 1)); strongest:
    exp(-2 pi lam zeta(m) (s/m)^(2/alpha)); NLOS uses m = 1.
    """
    if ctx.pathloss.bs_height != 0:
        raise ValueError("closed form needs bs_height == 0")
    _require_single_slope(ctx)
    if s < 0:
        raise ValueError("s must be non-negative")
    alpha = ctx.pathloss.alpha_los
    m = ctx.fading.m if los else 1
    if ctx.policy is AssociationPolicy.CLOSEST:
        r = ctx.serving_distance
        if r == 0:
            raise ValueError("closest association needs a positive serving distance")
        return math.exp(-np.pi * ctx.lam * r * r * (specfun.eta(s, m, r, alpha) - 1))
    return math.exp(-2 * np.pi * ctx.lam * specfun.zeta(m, alpha) * (s / m) ** (2 / alpha))


def laplace_elevated(ctx: LaplaceContext, s: float) -> float:
    """Closed forms for elevated BSs under Rayleigh fading and one exponent.

    closest: exp(-pi lam (r^2+h^2) (eta(s, 1, sqrt(r^2+h^2)) - 1));
    strongest: exp(-pi lam h^2 (eta(s, 1, h) - 1)), independent of r.
    """
    _require_single_slope(ctx)
    if ctx.fading.m != 1 and not isinstance(ctx.los_model, AllNlos):
        raise ValueError("elevated closed form needs Rayleigh fading (m = 1)")
    h = ctx.pathloss.bs_height
    if not h > 0:
        raise ValueError("elevated closed form needs bs_height > 0")
    if s < 0:
        raise ValueError("s must be non-negative")
    alpha = ctx.pathloss.alpha_los
    if ctx.policy is AssociationPolicy.CLOSEST:
        rh2 = ctx.serving_distance ** 2 + h * h
        return math.exp(-np.pi * ctx.lam * rh2 * (specfun.eta(s, 1, math.sqrt(rh2), alpha) - 1))
    return math.exp(-np.pi * ctx.lam * h * h * (specfun.eta(s, 1, h, alpha) - 1))


def log_laplace_derivatives(ctx: LaplaceContext, s: float, k: int,
                            tol: Tolerances = INNER) -> list:
    """[d/ds log L, ..., d^k/ds^k log L] at s > 0."""
    if k < 1:
        raise ValueError("order must be >= 1")
    if not s > 0:
        raise ValueError("derivatives need s > 0")
    c = laplace_coefficients(ctx, s, k, tol)
    return [(-1) ** j * math.factorial(j) * c[j] / s**j for j in range(1, k + 1)]


def laplace_derivatives(ctx: LaplaceContext, s: float, k: int,
                        tol: Tolerances = INNER) -> list:
    """[L, L', ..., L^(k)] at s via Faa di Bruno: L^(n) = L * B_n(kappa_1..kappa_n)."""
    kappa = log_laplace_derivatives(ctx, s, k, tol)
    value = laplace_general(ctx, s, tol)
    return [value * b for b in specfun.bell_complete_all(kappa)]


def derivative_sum_from_coefficients(c) -> float:
    """sum_{k<n} (-s)^k/k! L^(k)(s) given c_0..c_{n-1}."""
    a = specfun.bell_series(list(c[1:]))
    return math.exp(-c[0]) * math.fsum(a)


def derivative_sum(ctx: LaplaceContext, s: float, n: int, tol: Tolerances = INNER) -> float:
    """sum_{k=0}^{n-1} (-s)^k / k! * d^k L / ds^k, i.e. E[Gamma(n,1) CCDF at s I]."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return derivative_sum_from_coefficients(laplace_coefficients(ctx, s, n - 1, tol))
