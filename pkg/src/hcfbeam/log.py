import warnings

from .exceptions import LoggingDisabledWarning

try:
    import loguru
    LOGURU_INSTALLED = True
except ImportError:
    warnings.warn("loguru is not installed, hcfbeam logging is disabled...", LoggingDisabledWarning)
    LOGURU_INSTALLED = False

def info_log(msg: str):
    if LOGURU_INSTALLED: loguru.logger.info(msg)

def debug_log(msg: str):
    if LOGURU_INSTALLED: loguru.logger.debug(msg)

def warn_log(msg: str):
    if LOGURU_INSTALLED: loguru.logger.warning(msg)

def set_level(level: str = "INFO"):
    """Route hcfbeam messages to stderr at ``level``."""
    if not LOGURU_INSTALLED: return
    import sys
    loguru.logger.remove()
    loguru.logger.add(sys.stderr, level=level, format="<level>{level: <7}</level> | {message}")
