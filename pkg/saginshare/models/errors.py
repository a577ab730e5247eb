"""Error hierarchy shared across the package."""

from typing import Optional


class SaginError(Exception):
    """Base class for all package errors."""


class ParseError(SaginError):
    """A configuration or experiment file could not be parsed."""


class ValidationError(SaginError, ValueError):
    """A configuration value violates an invariant."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class DomainError(SaginError, ValueError):
    """A numeric function was called outside its domain."""


class InfeasibleModel(SaginError):
    """The conic solver certified a subproblem infeasible."""


class NoFeasiblePoint(SaginError):
    """No point satisfying the mutual benefit and backhaul constraints was found."""

    def __init__(self, message: str, slack: Optional[float] = None):
        self.slack = slack
        super().__init__(message)


class MissingPayload(SaginError):
    """An agent did not report for the current consensus round."""
