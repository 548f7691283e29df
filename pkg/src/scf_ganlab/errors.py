"""Exception hierarchy.

Every error raised by the package derives from ``GanLabError`` and carries an
``exit_code`` used by the command-line front end.
"""


class GanLabError(Exception):
    exit_code = 1


class ConfigError(GanLabError, ValueError):
    exit_code = 2


class DataError(GanLabError, ValueError):
    exit_code = 3


class NumericError(GanLabError, ArithmeticError):
    exit_code = 4


class BundleError(GanLabError, IOError):
    exit_code = 5


# nn core
class ShapeError(NumericError, ValueError):
    pass


class BatchTooSmallError(DataError):
    pass


# gan / metrics
class DomainError(NumericError, ValueError):
    pass


# data
class SchemaError(DataError):
    pass


class ParseError(DataError):
    pass


class StratificationError(DataError):
    pass


class StateError(DataError):
    pass


class DegenerateDataError(DataError):
    pass


class BindError(DataError):
    pass


class UndefinedRocError(DataError):
    pass


# model bundles
class NotABundleError(BundleError):
    pass


class BundleVersionError(BundleError):
    pass


class TruncatedBundleError(BundleError):
    pass


class ChecksumError(BundleError):
    pass


class DimensionMismatchError(BindError):
    pass
