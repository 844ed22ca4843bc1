import warnings

class HcfBeamWarning(UserWarning):
    """Base-class for non-fatal issues reported anywhere in hcfbeam."""

class HcfBeamError(Exception):
    """Base-class for *all* hcfbeam exceptions."""

class LoggingDisabledWarning(HcfBeamWarning):
    """loguru is not installed, log helpers are no-ops."""
