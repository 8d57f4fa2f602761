class InvalidPointError(ValueError):
    """A point is off its surface beyond the on-surface tolerance."""


class RetractionError(ArithmeticError):
    """The retraction is undefined for the given ambient point."""


class LoopConstructionError(ValueError):
    pass


class InconsistentLoopError(ValueError):
    pass


class NumericalBlowup(RuntimeError):
    """Raised by a flow step that could not produce a valid state.

    ``last_state`` is the state before the failing step.
    """

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class ConfigError(ValueError):
    """Scenario config rejected; ``violations`` lists (pointer, message) pairs."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = [f"{ptr}: {msg}" for ptr, msg in self.violations]
        super().__init__("; ".join(lines))


class UndefinedRateError(ValueError):
    """Latitude geodesic with cos(theta0) = 0 has no finite angular rate."""


class NoClosedOrbitError(ValueError):
    """Without a field the planar trajectories are lines, not circles."""
