"""Regularization of nonlinear inverse problems.

Forward problems (1-D elliptic parameter identification, the Radon
transform, diagonal operators), Tikhonov and iterative regularization,
operator learning, neural-network function approximation, parameter
choice rules and a reproducible experiment harness.
"""

from .errors import (
    ArgumentError,
    DegenerateParametrizationError,
    DependenceError,
    DimensionError,
    DomainError,
    InvRegError,
    NumericalError,
)

__version__ = "0.1.0"

__all__ = [
    "InvRegError",
    "ArgumentError",
    "DimensionError",
    "DomainError",
    "NumericalError",
    "DependenceError",
    "DegenerateParametrizationError",
    "__version__",
]
