"""Exception types raised across the package."""


class SensVolError(Exception):
    """Base class for all package errors."""


# --- ensemble / file ingestion ---

class MissingFile(SensVolError):
    pass


class SizeMismatch(SensVolError):
    pass


class RangeViolation(SensVolError):
    pass


class MalformedManifest(SensVolError):
    pass


class WrongParamCount(SensVolError):
    pass


class ParamOutOfRange(SensVolError):
    pass


class InvalidBaseN(SensVolError):
    pass


class IndexOutOfBounds(SensVolError):
    pass


# --- sensitivity measures ---

class VarianceZero(SensVolError):
    pass


class LayoutMismatch(SensVolError):
    pass


class NotSaltelliLayout(SensVolError):
    pass


class TooFewSamples(SensVolError):
    pass


class InvalidK(SensVolError):
    pass


class DegenerateData(SensVolError):
    pass


class EmptyCluster(SensVolError):
    pass


# --- space-filling curves ---

class LengthMismatch(SensVolError):
    pass


class OddDimension(SensVolError):
    pass


class Disconnected(SensVolError):
    pass


class UnsupportedDims(SensVolError):
    pass


# --- evaluation ---

class SeriesTooShort(SensVolError):
    pass


class DimsMismatch(SensVolError):
    pass


class GridMismatch(SensVolError):
    pass


# --- view data ---

class AllAxesFiltered(SensVolError):
    pass


class NegativeValue(SensVolError):
    pass


class EmptySelection(SensVolError):
    pass


class BadParamIndex(SensVolError):
    pass


class AllEmpty(SensVolError):
    pass
