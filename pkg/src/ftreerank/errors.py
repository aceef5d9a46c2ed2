"""Exception hierarchy shared by every module of the package."""


class FTreeRankError(Exception):
    """Base class for all package errors."""


class ConfigError(FTreeRankError, ValueError):
    pass


class DataError(FTreeRankError, ValueError):
    pass


class InvalidLength(DataError):
    pass


class InvalidScale(ConfigError):
    pass


class InvalidCoefficients(DataError):
    pass


class UnknownFamily(ConfigError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class InvalidCount(ConfigError):
    pass


class EmptyEnsemble(DataError):
    pass


class IndexMismatch(DataError):
    pass


class DegenerateSample(DataError):
    pass


class InvalidFeatures(DataError):
    pass


class CalibrationFailed(FTreeRankError, RuntimeError):
    pass


class SelectionFailed(FTreeRankError, RuntimeError):
    pass


class FormatError(DataError):
    pass


class ParseError(DataError):
    pass


class InvalidProtocol(ConfigError):
    pass


class ConfigMismatch(ConfigError):
    pass


class IoError(FTreeRankError, OSError):
    pass
