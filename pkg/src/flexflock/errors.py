"""Exception hierarchy shared across the package."""


class FlockError(Exception):
    """Base class for every error raised by flexflock."""


class InvalidArgument(FlockError, ValueError):
    pass


class DegenerateDirection(FlockError):
    """Two connected agents report identical gradients (mu = 0)."""


class CollisionState(DegenerateDirection):
    """Raised by the controller when a neighbor sits at zero gradient distance."""


class BarrierDomainError(FlockError):
    """mu left the open interval (0, r) on an edge governed by the barrier potential."""


class ConfigError(FlockError):
    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class SimulationAborted(FlockError):
    """A run stopped early; ``trace`` holds everything recorded up to the failure."""

    def __init__(self, cause, trace):
        super().__init__(f"{type(cause).__name__}: {cause}")
        self.cause = cause
        self.trace = trace
