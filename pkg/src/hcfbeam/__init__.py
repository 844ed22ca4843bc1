from importlib.metadata import version as _v, PackageNotFoundError

from . import model, backstepping, flatness, hcf, control, simulation, cli

try:
    __version__ = _v(__name__)
except PackageNotFoundError:
    __version__ = "0.0.0"
