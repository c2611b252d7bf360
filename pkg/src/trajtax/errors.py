"""Exception hierarchy shared across the toolkit."""


class TrajtaxError(Exception):
    """Base class for every error raised by trajtax."""


class SchemaError(TrajtaxError):
    """Input columns do not match the configured mapping."""


class EmptyInputError(TrajtaxError):
    """No usable records survived parsing or filtering."""


class ResampleError(TrajtaxError):
    """A class is too small for the requested resampling."""


class ConfigurationError(TrajtaxError):
    """Invalid taxonomy, grid, or experiment configuration."""


class ProtocolError(TrajtaxError):
    """Cross-validation protocol cannot be realised on the given labels."""


class DegenerateDataError(TrajtaxError):
    """Training data cannot support a classifier (one class, non-finite values)."""


class UndefinedMeritError(TrajtaxError):
    """CFS merit denominator is not positive."""
