"""Exception types shared across the toolkit."""


class ErmspecError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(ErmspecError):
    """A plan or parameter set is malformed or out of the supported range."""


class UsageError(ErmspecError):
    """An operation was called with arguments that violate its contract."""


class NumericalError(ErmspecError):
    """A numerical routine failed or produced values outside its guarantees."""


class ResourceError(ErmspecError):
    """A computation would exceed the memory available for dense storage."""


class InsufficientDataError(ErmspecError):
    """Not enough usable data points to perform the requested fit."""
