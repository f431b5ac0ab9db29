"""Error hierarchy shared by all modules."""


class DbarLabError(Exception):
    """Base class."""


class CapabilityError(DbarLabError):
    pass


class GeometryError(DbarLabError):
    pass


class NumericError(DbarLabError):
    pass


class InternalConsistencyError(DbarLabError):
    pass


class InfiniteTypeError(DbarLabError):
    pass


class ConfigError(DbarLabError):
    pass


class InfeasibleDivisionError(DbarLabError):
    pass


class AccuracyError(DbarLabError):
    pass


class DomainError(DbarLabError):
    pass
