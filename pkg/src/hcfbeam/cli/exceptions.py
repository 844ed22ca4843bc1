from ..exceptions import HcfBeamError

class CliError(HcfBeamError):
    """Base-class for command-line failures; ``exit_code`` is returned by the runner."""
    exit_code: int = 1

class ConfigInvalid(CliError):
    """The scenario file is missing, unparseable, incomplete or inconsistent."""
    exit_code = 2

class UnknownUnitError(ConfigInvalid):
    """A unit string was not found in the registry."""

class NumericalFailure(CliError):
    """A computation failed to converge or produced non-finite values."""
    exit_code = 3

class VerificationFailed(CliError):
    """At least one invariant of the verification suite exceeded its tolerance."""
    exit_code = 4
