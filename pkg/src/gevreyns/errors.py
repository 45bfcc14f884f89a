"""Exception hierarchy shared by all modules."""


class GevreyNSError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(GevreyNSError, ValueError):
    """An argument is outside its documented domain."""


class RejectedInputError(GevreyNSError, ValueError):
    """Input data failed a precondition (non-finite samples, bad shape)."""


class CorruptedFieldError(GevreyNSError):
    """A spectral field violates a structural invariant (Hermitian symmetry)."""


class BlockIndexError(GevreyNSError, IndexError):
    """A dyadic shell or uniform cell index is outside the active set."""


class CoverageError(GevreyNSError, ValueError):
    """A trace does not cover the requested time interval."""


class InsufficientSamplesError(GevreyNSError, ValueError):
    """A time-integrated norm was requested on a single-sample trace."""


class UnstableError(GevreyNSError):
    """A numerical computation produced non-finite values."""


class UnstableWeightError(UnstableError):
    """An exponential frequency weight exceeded the overflow guard e^50."""


class UndefinedRadiusError(GevreyNSError):
    """Radius fit requested on a window with too little spectral content."""


class SmallnessError(GevreyNSError, ValueError):
    """Initial datum fails the smallness check and no override was set."""


class CalibrationRefusedError(GevreyNSError):
    """Calibration was requested while a gating verification fails."""


class UsageError(GevreyNSError, ValueError):
    """Unrecognized identifier or malformed request."""
