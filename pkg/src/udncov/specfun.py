"""Special functions used by the coverage formulas.

All functions are pure.  ``eta`` accepts arrays for ``s`` and ``r`` so it can
sit inside vectorised quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .quadrature import integrate, integrate_to_inf


@dataclass(frozen=True)
class Tolerances:
    rel_tol: float = 1e-10
    abs_tol: float = 0.0
    max_terms: int = 10_000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.abs_tol < 0:
            raise ValueError("abs_tol must be non-negative")
        if self.max_terms < 1:
            raise ValueError("max_terms must be at least 1")


SPECIAL = Tolerances()
QUADRATURE = Tolerances(rel_tol=1e-8)


class SeriesError(ArithmeticError):
    """A series failed to converge within ``max_terms``."""


def _check_alpha(alpha):
    if not alpha > 2:
        raise ValueError(f"pathloss exponent must exceed 2, got {alpha}")


def _pos_series(ratio, n_elem, tol: Tolerances):
    """Sum positive-term series with term_0 = 1 and term_{n+1}/term_n = ratio(n).

    ``ratio(n)`` returns an array of length ``n_elem``.
    """
    total = np.ones(n_elem)
    term = np.ones(n_elem)
    for n in range(tol.max_terms):
        term = term * ratio(n)
        total += term
        # ratio < 1 from here on means the remaining tail is bounded by term * r / (1 - r)
        r = ratio(n + 1)
        with np.errstate(divide="ignore", over="ignore"):
            tail = np.where(r < 1, term * r / np.maximum(1 - r, 1e-300), np.inf)
        if np.all(tail <= 1e-2 * tol.rel_tol * total + tol.abs_tol):
            return total
    raise SeriesError(f"series did not converge in {tol.max_terms} terms")


def eta(s, m: int, r, alpha: float, tol: Tolerances = SPECIAL):
    """2F1(m, -2/alpha; 1 - 2/alpha; -s / (m r^alpha)).

    With x = s / (m r^alpha) >= 0 two positive-term expansions are used:
    x < 1: Pfaff transform, (1+x)^-m * sum (m)_n / (1-d)_n * w^n with w = x/(1+x);
    x >= 1: the 1/z connection formula, whose second branch terminates,
    leaving 2 zeta(m) x^d + d/(m+d) (1+x)^-m * sum (m)_n/(m+d+1)_n (1+x)^-n.
    Here d = 2/alpha.
    """
    _check_alpha(alpha)
    if m < 1 or int(m) != m:
        raise ValueError(f"m must be a positive integer, got {m}")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("eta requires r > 0")
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("eta requires s >= 0")
    x = s / (m * r**alpha)
    shape = x.shape
    x = x.ravel()
    d = 2.0 / alpha
    out = np.empty_like(x)

    small = x < 1
    if np.any(small):
        xs = x[small]
        w = xs / (1 + xs)
        series = _pos_series(lambda n: (m + n) / (1 - d + n) * w, xs.size, tol)
        out[small] = (1 + xs) ** (-m) * series
    if np.any(~small):
        xl = x[~small]
        v = 1 / (1 + xl)
        series = _pos_series(lambda n: (m + n) / (m + d + 1 + n) * v, xl.size, tol)
        out[~small] = 2 * zeta(m, alpha) * xl**d + d / (m + d) * v**m * series
    out = out.reshape(shape)
    return float(out) if out.ndim == 0 else out


def eta_tail(k: int, theta: float, m: int, alpha: float, tol: Tolerances = SPECIAL) -> float:
    """eta(m theta, m, 1) minus the first k terms of its Pfaff series.

    The series terms are T_n = (m)_n / (1-d)_n * theta^n * (1+theta)^(-m-n),
    so the result is the positive tail sum_{n>=k} T_n.
    """
    d = 2.0 / alpha
    x = float(theta)
    if x == 0:
        return 1.0 if k == 0 else 0.0
    log_w = math.log(x) - math.log1p(x)

    def log_term(n):
        return (math.lgamma(m + n) - math.lgamma(m) - math.lgamma(1 - d + n)
                + math.lgamma(1 - d) + n * log_w - m * math.log1p(x))

    head = sum(math.exp(log_term(n)) for n in range(k))
    if x >= 1:
        full = eta(m * x, m, 1.0, alpha, tol)
        if head < 0.5 * full:
            return full - head
    w = math.exp(log_w)
    first = math.exp(log_term(k))
    rest = _pos_series(lambda n: np.array([(m + k + n) / (1 - d + k + n) * w]), 1, tol)
    return float(first * rest[0])


def eta_quadrature(s: float, m: int, r: float, alpha: float, tol: Tolerances = QUADRATURE):
    """eta from its defining integral 1 + (2/r^2) int_r^inf (1 - (1 + (s/m) t^-a)^-m) t dt."""
    _check_alpha(alpha)
    if r <= 0:
        raise ValueError("eta requires r > 0")

    if s == 0:
        return 1.0

    # integrand / s = phi(x) t^(1-alpha) / m with x = (s/m) t^-alpha and
    # phi(x) = (1 - (1+x)^-m) / x, so tiny (even subnormal) s stays well scaled
    def f(t):
        u = t ** (-alpha)
        x = (s / m) * u
        with np.errstate(divide="ignore", invalid="ignore"):
            phi = np.where(x > 1e-8, -np.expm1(-m * np.log1p(x)) / x, m * (1 - 0.5 * (m + 1) * x))
        return phi * u / m * t

    val, _ = integrate_to_inf(f, r, scale=r, decay=alpha - 1,
                              rel_tol=tol.rel_tol * 1e-2, abs_tol=0.0)
    return 1.0 + 2.0 * s * val / r**2


def zeta(m: int, alpha: float) -> float:
    """-Gamma(m + 2/alpha) Gamma(-2/alpha) / (alpha Gamma(m)); always positive."""
    _check_alpha(alpha)
    if m < 1:
        raise ValueError("m must be >= 1")
    d = 2.0 / alpha
    # Gamma(-d) = Gamma(1-d) / (-d) < 0
    log_val = math.lgamma(m + d) + math.lgamma(1 - d) - math.log(d) - math.lgamma(m) - math.log(alpha)
    return math.exp(log_val)


def pochhammer(x: float, n: int) -> float:
    out = 1.0
    for i in range(n):
        out *= x + i
    return out


def bell_complete(x: Sequence[float]) -> float:
    """Complete Bell polynomial B_k(x_1, ..., x_k), k = len(x)."""
    k = len(x)
    if k == 0:
        raise ValueError("bell_complete needs at least one argument")
    return bell_complete_all(x)[k]


def bell_complete_all(x: Sequence[float]) -> list:
    """[B_0, B_1(x_1), ..., B_k(x_1..x_k)] via B_{n+1} = sum_i C(n,i) B_{n-i} x_{i+1}."""
    k = len(x)
    b = [1.0]
    for n in range(k):
        b.append(sum(math.comb(n, i) * b[n - i] * x[i] for i in range(n + 1)))
    return b


def bell_series(c: Sequence[float]) -> list:
    """Scaled complete Bell values a_n = B_n(y)/n! where y_j = j! c_j.

    This is the power-series exponential: exp(sum_j c_j z^j) = sum_n a_n z^n,
    computed with a_n = (1/n) sum_{j=1}^n j c_j a_{n-j}.  It avoids the
    factorial growth of the unscaled recurrence.
    """
    a = [1.0]
    for n in range(1, len(c) + 1):
        a.append(sum(j * c[j - 1] * a[n - j] for j in range(1, n + 1)) / n)
    return a


def bell_incomplete(k: int, j: int, x: Sequence[float]) -> float:
    """Partial Bell polynomial B_{k,j}(x_1, ..., x_{k-j+1})."""
    if not 1 <= j <= k:
        raise ValueError(f"need 1 <= j <= k, got k={k}, j={j}")
    if len(x) != k - j + 1:
        raise ValueError(f"B_{{{k},{j}}} takes {k - j + 1} arguments, got {len(x)}")
    return bell_incomplete_table(k, x)[k][j]


def bell_incomplete_table(k: int, x: Sequence[float]) -> list:
    """Table T[n][i] = B_{n,i}(x) for 0 <= i <= n <= k.

    Uses B_{n,i} = sum_{q=1}^{n-i+1} C(n-1, q-1) x_q B_{n-q,i-1}; only
    x_1..x_{n-i+1} are read, so a short ``x`` suffices for the entries needed.
    """
    t = [[0.0] * (k + 1) for _ in range(k + 1)]
    t[0][0] = 1.0
    for n in range(1, k + 1):
        for i in range(1, n + 1):
            acc = 0.0
            for q in range(1, n - i + 2):
                if q > len(x):
                    break
                acc += math.comb(n - 1, q - 1) * x[q - 1] * t[n - q][i - 1]
            t[n][i] = acc
    return t


def tricomi_u(a: int, b: float, z: float, tol: Tolerances = QUADRATURE) -> float:
    """U(a, b, z) = (1/Gamma(a)) int_0^inf e^{-zt} t^{a-1} (1+t)^{b-a-1} dt for integer a >= 1."""
    return math.exp(log_tricomi_u(a, b, z, tol))


def log_tricomi_u(a: int, b: float, z: float, tol: Tolerances = QUADRATURE) -> float:
    if not z > 0:
        raise ValueError("tricomi_u requires z > 0")
    if a < 1 or int(a) != a:
        raise ValueError("tricomi_u requires a positive integer a")
    # integrand peaks near t* = (a-1)/z; rescale so its log-maximum is 0
    t_peak = max((a - 1) / z, 0.0)

    def log_f(t):
        with np.errstate(divide="ignore"):
            return (a - 1) * np.log(t) - z * t + (b - a - 1) * np.log1p(t)

    ref = float(log_f(np.array([t_peak]))[0]) if a > 1 else 0.0
    width = math.sqrt(max(a, 1)) / z + 1.0 / z
    lo = max(t_peak - 8 * width, 0.0)
    bps = [p for p in (t_peak - 8 * width, t_peak, t_peak + 8 * width) if p > 0]

    def f(t):
        return np.exp(log_f(t) - ref)

    if lo > 0:
        head, _ = integrate(f, 0.0, lo, rel_tol=tol.rel_tol, abs_tol=0.0)
    else:
        head = 0.0
    body, _ = integrate_to_inf(f, lo, scale=width, breakpoints=bps,
                               rel_tol=tol.rel_tol * 1e-2, abs_tol=0.0)
    return math.log(head + body) + ref - math.lgamma(a)


def exp_integral(nu: float, z: float, tol: Tolerances = QUADRATURE) -> float:
    """Generalised exponential integral E_nu(z) = int_1^inf e^{-zt} t^{-nu} dt."""
    if not z > 0:
        raise ValueError("exp_integral requires z > 0")
    if nu < 0:
        raise ValueError("exp_integral requires nu >= 0")
    if nu == 0:
        return math.exp(-z) / z

    def f(t):
        return np.exp(-z * (t - 1)) * t ** (-nu)

    val, _ = integrate_to_inf(f, 1.0, scale=1.0 / z, rel_tol=tol.rel_tol * 1e-2, abs_tol=0.0)
    return math.exp(-z) * val


def gamma_ccdf(shape: int, z, rate: float | None = None):
    """P[G > z] for G ~ Gamma(shape, 1/rate) with integer shape.

    ``rate`` defaults to ``shape`` (unit-mean Nakagami power gain), giving
    e^{-mz} sum_{k<m} (mz)^k / k!.
    """
    if shape < 1 or int(shape) != shape:
        raise ValueError("shape must be a positive integer")
    rate = shape if rate is None else rate
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("gamma_ccdf requires z >= 0")
    y = rate * z
    term = np.exp(-y)
    total = term.copy()
    for k in range(1, int(shape)):
        term = term * y / k
        total = total + term
    total = np.minimum(total, 1.0)
    return float(total) if total.ndim == 0 else total
