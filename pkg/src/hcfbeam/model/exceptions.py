from ..exceptions import HcfBeamError, HcfBeamWarning

class ModelError(HcfBeamError):
    """Base-class for beam-model problems."""

class NonPositiveParameter(ModelError):
    """A physical coefficient is zero or negative somewhere on [0, 1]."""

class SpeedOrderingViolation(ModelError):
    """mu_1(z) <= mu_2(z) somewhere; only mu_1 > mu_2 is supported."""

class GridTooCoarse(ModelError):
    """The spatial grid has fewer than the minimum number of points."""

class GridMismatch(ModelError):
    """A field is sampled on a grid other than the model grid."""

class NonSmoothCoefficient(ModelError):
    """A coefficient has an unbounded or non-finite derivative."""

class CoefficientExpressionError(ModelError):
    """A coefficient expression could not be parsed or is not a function of z alone."""

class ClampedBoundaryWarning(HcfBeamWarning):
    """A physical field violates the clamped-end conditions at z = 0."""
