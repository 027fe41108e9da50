"""
Error taxonomy for nearres.

Two families: ValidationError for bad input (CLI exit 1) and
NumericalFailure for computations that went wrong (CLI exit 2).
"""


class NearResError(Exception):
    """Base class for every error raised by the package"""


class ValidationError(NearResError, ValueError):
    """Input rejected before any numerics ran"""


class ZeroWaveVectorError(ValidationError):
    pass


class DivergenceError(ValidationError):
    pass


class ConvolutionError(ValidationError):
    pass


class GeometryMismatchError(ValidationError):
    pass


class DegenerateConfigurationError(ValidationError):
    pass


class ResourceLimitError(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class NumericalFailure(NearResError, ArithmeticError):
    """A computation produced something it must not"""


class NonFiniteError(NumericalFailure):
    pass


class BlowUpError(NumericalFailure):
    def __init__(self, message: str, time: float = float('nan'), ratio: float = float('nan')):
        super().__init__(message)
        self.time = time
        self.ratio = ratio


class VerificationError(NumericalFailure):
    """A constructed point failed the property it was built to have"""
