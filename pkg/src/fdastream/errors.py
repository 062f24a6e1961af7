"""Exception types shared across the package."""


class FdaStreamError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(FdaStreamError):
    """Invalid configuration or a precondition on sizes/state was violated."""


class DataQualityError(FdaStreamError):
    """Input data was malformed: non-finite values, shape mismatches, parse errors."""
