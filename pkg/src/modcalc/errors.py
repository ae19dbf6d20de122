"""Exception hierarchy shared by all modules."""


class ModcalcError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(ModcalcError, ValueError):
    pass


class NumericError(ModcalcError, ArithmeticError):
    pass


class UnsupportedBasisError(ConfigurationError):
    pass


class SingularBasisError(ConfigurationError):
    pass


class InvalidDimensionError(ConfigurationError):
    pass


class InvalidFieldError(ConfigurationError):
    pass


class AlignmentError(ConfigurationError):
    pass


class InvalidExponentError(ConfigurationError):
    pass


class InvalidWeightError(ConfigurationError):
    pass


class InvalidWindowError(ConfigurationError):
    pass


class InvalidProbeError(ConfigurationError):
    pass


class UnsupportedMethodError(ConfigurationError):
    pass


class MemoryGuardError(ConfigurationError):
    pass


class RefusedConversionError(ConfigurationError):
    """Sampled symbol does not decay, so a periodic multiplier would alias."""


class OrderTooHighError(NumericError):
    pass


class MollificationDivergedError(NumericError):
    pass


class UndefinedFitError(NumericError):
    pass
