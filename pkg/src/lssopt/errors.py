"""Exception types raised across the package."""


class LssError(Exception):
    """Base class for all package errors."""


class InvalidInputError(LssError, ValueError):
    pass


class ConfigError(LssError, ValueError):
    pass


class DuplicateStateError(LssError, ValueError):
    pass


class UnknownStateError(LssError, KeyError):
    pass


class EmptyHistoryError(LssError, ValueError):
    pass


class InsufficientHistoryError(LssError, ValueError):
    pass


class PoolExhaustedError(LssError, ValueError):
    pass
