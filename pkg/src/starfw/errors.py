"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """A vector's dimension does not match the object it is used with."""


class SingularGradientError(ValueError):
    """Gradient requested at a point where it is unbounded or undefined."""


class CapabilityError(NotImplementedError):
    """Operation not supported by this object (e.g. no Hessian available)."""


class CheckerOnlyError(ValueError):
    """Objective is meant for property checking only and may not be solved."""


class InfeasiblePointError(ValueError):
    """Point lies outside the feasible set beyond the allowed tolerance."""


class MissingConstantError(ValueError):
    """A bound audit needs a constant that is neither declared nor supplied."""


class StepsizeFailure(RuntimeError):
    """A stepsize search exhausted its iteration budget.

    ``last_lambda`` carries the last stepsize that was tested before giving up.
    """

    def __init__(self, message: str, last_lambda: float | None = None):
        super().__init__(message)
        self.last_lambda = last_lambda


class LineSearchFailure(StepsizeFailure):
    """Backtracking line search never met its sufficient-decrease test."""


class CurvatureSearchFailure(StepsizeFailure):
    """Curvature-estimate doubling search never met its acceptance test."""
