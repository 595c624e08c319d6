"""Exception hierarchy shared by all modules."""


class FrameWidthsError(Exception):
    """Base class for library errors."""


class ConfigurationError(FrameWidthsError, ValueError):
    pass


class ResolutionError(FrameWidthsError, ValueError):
    """Requested level is finer than the sampled data supports."""


class NumericError(FrameWidthsError, ArithmeticError):
    pass


class ParameterError(FrameWidthsError, ValueError):
    pass


class WeightDomainError(FrameWidthsError, KeyError):
    pass


class SizeError(FrameWidthsError, ValueError):
    pass


class FitError(FrameWidthsError, ValueError):
    pass


class SpectralError(FrameWidthsError, ArithmeticError):
    pass


class UsageError(FrameWidthsError, ValueError):
    pass


class InvertibilityError(FrameWidthsError, ArithmeticError):
    pass


class AdmissibilityError(FrameWidthsError, ValueError):
    pass


class GeometryError(FrameWidthsError, ValueError):
    pass


class CoefficientIndexError(FrameWidthsError, IndexError):
    """Coefficient index outside the declared index family."""


class RegularityError(FrameWidthsError, ValueError):
    pass


class DomainError(FrameWidthsError, ValueError):
    """Input violates the operator's domain (e.g. the mean-zero constraint)."""
