"""LOS probability models, pathloss and fading laws."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import specfun


@dataclass(frozen=True)
class AllLos:
    name = "all_los"


@dataclass(frozen=True)
class AllNlos:
    name = "all_nlos"


@dataclass(frozen=True)
class ThreeGpp:
    """ITU-R UMi LOS probability, min(18/r, 1)(1 - e^{-r/36}) + e^{-r/36}."""
    name = "3gpp"


@dataclass(frozen=True)
class Step:
    """Every BS closer than ``d`` meters is in LOS, every other one in NLOS."""
    d: float
    name = "step"

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError("step distance must be positive")


@dataclass(frozen=True)
class Buildings:
    """Blockage by a 1-d Poisson field of buildings of fixed height.

    A link of horizontal length r is LOS when no building falls in the
    segment of length tau*r next to the UE, tau = min(building_height/h, 1).
    """
    building_density: float
    building_height: float
    name = "buildings"

    def __post_init__(self):
        if self.building_density < 0 or self.building_height < 0:
            raise ValueError("building density and height must be non-negative")

    def tau(self, bs_height: float) -> float:
        if self.building_height == 0:
            return 0.0
        if bs_height == 0:
            return 1.0
        return min(self.building_height / bs_height, 1.0)


LosModel = Union[AllLos, AllNlos, ThreeGpp, Step, Buildings]


@dataclass(frozen=True)
class PathlossParams:
    alpha_los: float
    alpha_nlos: float
    bs_height: float = 0.0

    def __post_init__(self):
        if not self.alpha_los > 2:
            raise ValueError(f"alpha_los must exceed 2, got {self.alpha_los}")
        if self.alpha_nlos < self.alpha_los:
            raise ValueError("alpha_nlos must be >= alpha_los")
        if self.bs_height < 0:
            raise ValueError("bs_height must be non-negative")

    @classmethod
    def single_slope(cls, alpha: float, bs_height: float = 0.0) -> "PathlossParams":
        return cls(alpha, alpha, bs_height)

    @property
    def is_single_slope(self) -> bool:
        return self.alpha_los == self.alpha_nlos

    def alpha(self, los: bool) -> float:
        return self.alpha_los if los else self.alpha_nlos


@dataclass(frozen=True)
class FadingSpec:
    """Nakagami shape ``m`` for LOS links and the BS antenna count ``n_t``.

    NLOS links are always Rayleigh.  With ``n_t > 1`` the serving link uses
    MRT beamforming; interfering links keep single-antenna statistics.
    """
    m: int = 1
    n_t: int = 1
    rician_k: float | None = None

    def __post_init__(self):
        if self.rician_k is not None:
            if self.rician_k < 0:
                raise ValueError("Rician K-factor must be non-negative")
            object.__setattr__(self, "m", m_from_rician(self.rician_k))
        if self.m < 1 or int(self.m) != self.m:
            raise ValueError(f"m must be a positive integer, got {self.m}")
        if self.n_t < 1 or int(self.n_t) != self.n_t:
            raise ValueError(f"n_t must be a positive integer, got {self.n_t}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "n_t", int(self.n_t))

    def serving_shape(self, los: bool) -> int:
        """Number of derivative terms (Gamma shape) of the serving-link gain."""
        return self.n_t * self.m if los else self.n_t


def m_from_rician(k: float) -> int:
    """Nakagami shape matching a Rician K-factor (linear), rounded to the nearest integer."""
    return max(1, int(math.floor((k + 1) ** 2 / (2 * k + 1) + 0.5)))


def los_probability(model: LosModel, r, bs_height: float = 0.0):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("distance must be non-negative")
    if isinstance(model, AllLos):
        p = np.ones_like(r)
    elif isinstance(model, AllNlos):
        p = np.zeros_like(r)
    elif isinstance(model, ThreeGpp):
        e = np.exp(-r / 36.0)
        near = np.minimum(18.0 / np.maximum(r, 18.0), 1.0)
        p = near * (1.0 - e) + e
    elif isinstance(model, Step):
        p = (r < model.d).astype(float)
    elif isinstance(model, Buildings):
        p = np.exp(-model.building_density * model.tau(bs_height) * r)
    else:
        raise TypeError(f"unknown LOS model {model!r}")
    return float(p) if p.ndim == 0 else p


def los_breakpoints(model: LosModel) -> tuple:
    """Distances where p_LOS is not smooth (kinks or jumps)."""
    if isinstance(model, ThreeGpp):
        return (18.0,)
    if isinstance(model, Step):
        return (model.d,)
    return ()


def pathloss(r, params: PathlossParams, los: bool):
    """(r^2 + h^2)^(-alpha/2) with the LOS or NLOS exponent."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("distance must be non-negative")
    d2 = r * r + params.bs_height ** 2
    if np.any(d2 == 0):
        raise ValueError("degenerate geometry: r = 0 with h = 0")
    out = d2 ** (-0.5 * params.alpha(los))
    return float(out) if out.ndim == 0 else out


def fading_ccdf(spec: FadingSpec, los: bool, z):
    """CCDF of the serving-link power gain.

    LOS: Gamma(n_t m, 1/m); NLOS: chi-squared with 2 n_t degrees of freedom
    (unit-mean exponential per antenna).
    """
    if los:
        return specfun.gamma_ccdf(spec.n_t * spec.m, z, rate=spec.m)
    return specfun.gamma_ccdf(spec.n_t, z, rate=1.0)
