"""Exception types shared across the package."""


class LorlenError(Exception):
    """Base class for all errors raised by this package."""


class CausalCycleError(LorlenError):
    """Raised when generating relations contain a directed cycle."""

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__(f"causal generators contain a cycle: {self.cycle}")


class NotRelatedError(LorlenError):
    """Raised when an operation requires a related event pair and none exists."""


class UnrealizableError(LorlenError):
    """Raised when side lengths violate the reverse triangle inequality."""


class NonMetricError(LorlenError):
    """Raised when a distance table fails the metric axioms."""

    def __init__(self, message, witness=None):
        self.witness = witness
        super().__init__(message)


class NoLimitError(LorlenError):
    """Raised when a maximizer family has no stable limit chain."""


class NoRelatedPairsError(LorlenError):
    """Raised when an angle schedule produces no chronologically related pairs."""


class EmptyHorizonError(LorlenError):
    """Raised when no chain reaches the future edge of the sampled window."""
