from ..exceptions import HcfBeamError

class FlatnessError(HcfBeamError):
    """Base-class for reference and parametrization problems."""

class DegenerateWindow(FlatnessError):
    """The transition window has tT <= t0."""
