"""Exception hierarchy shared across the package."""


class MatchlabError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(MatchlabError, ValueError):
    """Inputs violate a documented precondition or invariant."""


class DomainError(ValidationError):
    """A numeric argument lies outside the function's domain."""


class UnsplittableEdgeError(ValidationError):
    """Edge cannot be split (certain edges have infinite log-weight)."""


class CapabilityError(MatchlabError):
    """Request exceeds a hard size cap of an exhaustive routine."""


class ParseError(MatchlabError, ValueError):
    """A document could not be parsed; message carries line/field context."""


class NonConvergenceError(MatchlabError):
    """Iterative solve hit its iteration cap.

    Carries the last iterate in ``last_solution`` so callers can inspect it.
    """

    def __init__(self, message, last_solution=None):
        super().__init__(message)
        self.last_solution = last_solution


class InfeasibleBoundError(MatchlabError):
    """A bound equation has no admissible solution."""


class UndefinedRatioError(MatchlabError):
    """Competitive ratio undefined (benchmark mean is not positive)."""
