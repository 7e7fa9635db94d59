"""Exception and warning types raised across the package."""


class RffSpecError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(RffSpecError, ValueError):
    pass


class DegenerateProposalError(RffSpecError, ValueError):
    """A proposal density is zero or negative at a sampled frequency."""


class UnsupportedDimensionError(RffSpecError, ValueError):
    pass


class NumericalError(RffSpecError, ArithmeticError):
    """A factorization or solve failed.

    Attributes
    ----------
    condition : float or None
        Condition-number estimate of the offending matrix, when available.
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class RegimeError(RffSpecError, ValueError):
    """The inputs fall outside the regime in which a bound is meaningful."""


class NonConvergenceError(RffSpecError, RuntimeError):
    """An iterative solver hit its iteration limit.

    Attributes
    ----------
    residuals : list of float
        Relative residual norm after every iteration.
    """

    def __init__(self, message, residuals):
        super().__init__(message)
        self.residuals = list(residuals)


class RegimeWarning(UserWarning):
    """A computation proceeded outside the regime its constants assume."""


class SupportWarning(UserWarning):
    """A proposal density does not cover the support of the spectral density."""
