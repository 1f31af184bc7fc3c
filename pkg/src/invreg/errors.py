"""Exception hierarchy shared by all modules.

``ArgumentError`` maps to CLI exit code 2 and ``NumericalError`` to 3.
"""


class InvRegError(Exception):
    """Base class for library errors."""


class ArgumentError(InvRegError, ValueError):
    """Invalid arguments, configuration or preconditions."""


class DimensionError(ArgumentError):
    """Shapes or grids do not match."""


class DomainError(ArgumentError):
    """Parameter outside the admissible domain of the forward operator."""


class NumericalError(InvRegError, ArithmeticError):
    """A numerical procedure failed (divergence, singular system, ...)."""


class DependenceError(NumericalError):
    """Vectors are numerically linearly dependent."""


class DegenerateParametrizationError(NumericalError):
    """Jacobian of a parametrization lost all rank."""
