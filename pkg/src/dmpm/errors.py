"""Exception classes shared across the simulator."""


class SimulationError(RuntimeError):
    """Base class for failures during simulation or optimization."""


class BoundaryViolationError(SimulationError):
    """A particle left the valid grid interior (2-cell safety margin)."""


class InversionError(SimulationError):
    """A deformation gradient reached det(F) <= 0."""


class NumericalFailureError(SimulationError):
    """NaN or Inf appeared in the particle state or its derivative."""


class ConfigurationError(ValueError):
    """Invalid or inconsistent run configuration."""
