"""Exception hierarchy shared by all modules."""


class ShadowPacError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(ShadowPacError, ValueError):
    pass


class NumericalError(ShadowPacError, ArithmeticError):
    pass


class NotHermitianError(ShadowPacError, ValueError):
    pass


class InvalidStateError(ShadowPacError, ValueError):
    pass


class InvalidPovmError(ShadowPacError, ValueError):
    pass


class LabelDomainError(ShadowPacError, ValueError):
    pass


class UnsupportedError(ShadowPacError, NotImplementedError):
    pass


class NotCompleteError(ShadowPacError, ValueError):
    """The unitary ensemble is not tomographically complete."""


class EmptyDatasetError(ShadowPacError, ValueError):
    pass


class EmptyInputError(ShadowPacError, ValueError):
    pass


class InsufficientSamplesError(ShadowPacError, ValueError):
    pass


class RangeError(ShadowPacError, ValueError):
    pass


class SampleConsumedError(ShadowPacError, RuntimeError):
    """A quantum sample was measured a second time."""


class ConfigError(ShadowPacError, ValueError):
    pass
