"""Domain errors raised by the simulation services."""


class SingularPositionError(ValueError):
    """Field evaluated on (or too close to) a current filament."""


class NoRootError(ValueError):
    """Root search found no sign change in its bracket."""


class InstabilityError(RuntimeError):
    """Wavepacket scale factor left its admissible range."""


class NonConvergenceError(RuntimeError):
    """Iterative fit or solver did not converge."""


class DegeneratePeriodError(ValueError):
    """Fringe pattern has no usable oscillation period."""


class GridMismatchError(ValueError):
    """Patterns or potentials do not share a spatial grid."""


class GridTooLargeError(ValueError):
    """Requested evaluation grid exceeds the cell limit."""


class InsufficientDataError(ValueError):
    """Not enough usable samples for the requested fit."""


class ScenarioValidationError(ValueError):
    """Scenario entry violates the schema or a sequence invariant."""

    def __init__(self, message: str, index: int = -1, field: str = ""):
        super().__init__(message)
        self.index = index
        self.field = field
