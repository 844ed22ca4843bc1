from ..exceptions import HcfBeamError

class HcfError(HcfBeamError):
    """Base-class for HCF-state problems."""

class WindowUnderflow(HcfError):
    """An input-prediction buffer or eta profile does not cover the window it is evaluated on."""
