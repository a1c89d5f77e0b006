"""Simulation of qubit-mediated entanglement between two magnon modes."""
from .errors import (
    InvalidArgumentError,
    MagnonicError,
    NonConvergenceError,
    NonDispersiveError,
    ParameterError,
    SchemaError,
    SingularParameterError,
    SymmetricDetuningError,
    TruncationError,
)
from .model import KHZ, MHZ, DerivedParams, SystemParams, derive_params, reference_params
from .operators import DensityState, SpaceLayout, make_layout

__version__ = "0.1.0"

__all__ = [
    "DensityState",
    "DerivedParams",
    "InvalidArgumentError",
    "KHZ",
    "MHZ",
    "MagnonicError",
    "NonConvergenceError",
    "NonDispersiveError",
    "ParameterError",
    "SchemaError",
    "SingularParameterError",
    "SpaceLayout",
    "SymmetricDetuningError",
    "SystemParams",
    "TruncationError",
    "derive_params",
    "make_layout",
    "reference_params",
    "__version__",
]
