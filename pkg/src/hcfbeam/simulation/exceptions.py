from ..exceptions import HcfBeamError

class SimulationError(HcfBeamError):
    """Base-class for simulation problems."""

class CflViolation(SimulationError):
    """The time step violates dt * max(lambda1) / dz <= 1."""

class SchemeUnsupported(SimulationError):
    """The requested scheme cannot run this model, grid or input source."""

class AlreadyRegisteredException(SimulationError):
    """A scheme, input source or initial condition with this identifier already exists."""

class NotRegisteredException(SimulationError):
    """No scheme, input source or initial condition is registered under this identifier."""
