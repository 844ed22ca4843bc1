from ..exceptions import HcfBeamError

class KernelError(HcfBeamError):
    """Base-class for backstepping-kernel problems."""

class NoConvergence(KernelError):
    """Successive approximation did not reach the requested tolerance."""

class KernelCacheError(KernelError):
    """A kernel cache file is malformed or belongs to another model."""
