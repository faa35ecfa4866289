"""Coverage and area spectral efficiency of Poisson cellular networks with
elevated BSs and LOS/NLOS Nakagami-m propagation."""
from .channel import (AllLos, AllNlos, Buildings, FadingSpec, PathlossParams, Step,
                      ThreeGpp)
from .coverage import CoverageResult, Method, NetworkConfig
from .laplace import AssociationPolicy, LaplaceContext
from .specfun import Tolerances

__version__ = "0.1.0"

__all__ = [
    "AllLos", "AllNlos", "AssociationPolicy", "Buildings", "CoverageResult",
    "FadingSpec", "LaplaceContext", "Method", "NetworkConfig", "PathlossParams",
    "Step", "ThreeGpp", "Tolerances",
]
