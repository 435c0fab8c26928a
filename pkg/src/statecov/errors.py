"""Exception hierarchy shared across the package."""


class StatecovError(Exception):
    """Base class for all package errors."""


class DimensionError(StatecovError):
    """Inconsistent matrix dimensions."""


class UnstableSystemError(StatecovError):
    """The state matrix has spectral radius >= 1."""


class RankDeficientError(StatecovError):
    """An input matrix fails a required rank condition."""


class NotStateCovarianceError(StatecovError):
    """Matrix does not satisfy the displacement structure of the filter pair."""


class ConsistencyError(StatecovError):
    """An internal cross-check failed beyond tolerance."""


class ToleranceAmbiguityError(StatecovError):
    """Equivalent numerical tests disagree near the rank threshold."""


class InfeasibleError(StatecovError):
    """Convex program is infeasible."""

    def __init__(self, message, margin=None):
        super().__init__(message)
        self.margin = margin


class SolverError(StatecovError):
    """Convex solver failed to converge."""
