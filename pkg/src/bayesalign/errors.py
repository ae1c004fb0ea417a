"""Exception types shared across the package."""


class BayesAlignError(Exception):
    """Base class for all package errors."""


class InvalidInputError(BayesAlignError, ValueError):
    """Raised when inputs violate a documented precondition."""


class InjectivityError(BayesAlignError):
    """Raised when a tangent vector or sphere point leaves the injectivity
    domain of the exponential map (norm/distance reaching pi)."""


class NumericalError(BayesAlignError):
    """Raised when a numerical routine (factorization, solve) fails."""
