from ..exceptions import HcfBeamError

class ControlError(HcfBeamError):
    """Base-class for controller problems."""

class NegativeOffset(ControlError):
    """A prediction was requested at a negative offset tau < 0."""

class GainOutOfRange(ControlError):
    """A tracking gain violates |gamma| < 1."""
