"""Parameterized quantum channels as state-affine reservoirs.

Submodules
----------
linalg
    Small dense linear algebra (Jacobi eigen/SVD, exp, solves, rank).
quantum
    Density matrices, channels, the channel zoo and Lindblad steps.
sas
    Gell-Mann bases, Bloch coordinates and affine (p, q) representations.
injectivity
    Rank conditions, constant-filter detection, preimages and scans.
tasks
    Short-term-memory benchmark and capacity sweeps.
"""

from . import injectivity, linalg, quantum, sas, tasks
from .errors import (
    ChannelError,
    DegenerateCapacityError,
    EspViolationError,
    NoFixedPointError,
    NonFiniteError,
    ShapeError,
    SingularMatrixError,
)
from .quantum import Channel, LindbladModel, ParamChannel
from .sas import SasModel, extract_sas, gell_mann_basis

__version__ = "0.1.0"

__all__ = [
    "Channel",
    "ChannelError",
    "DegenerateCapacityError",
    "EspViolationError",
    "LindbladModel",
    "NoFixedPointError",
    "NonFiniteError",
    "ParamChannel",
    "SasModel",
    "ShapeError",
    "SingularMatrixError",
    "extract_sas",
    "gell_mann_basis",
    "injectivity",
    "linalg",
    "quantum",
    "sas",
    "tasks",
]
