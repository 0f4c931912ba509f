"""Numerical Finsler geometry with truncated Taylor jets."""

__version__ = "0.1.0"

from .curvature import flag_curvature, hh_curvature, scalar_curvature_check
from .errors import FinslerError
from .finsler_core import MetricSpec, fundamental_tensor, tensor_frame
from .jets import Jet
from .numata import NumataData, numata_K
from .schwarz import CircleMap, constant_K_map, one_dim_K, schwarzian

__all__ = [
    "CircleMap",
    "FinslerError",
    "Jet",
    "MetricSpec",
    "NumataData",
    "constant_K_map",
    "flag_curvature",
    "fundamental_tensor",
    "hh_curvature",
    "numata_K",
    "one_dim_K",
    "scalar_curvature_check",
    "schwarzian",
    "tensor_frame",
]
