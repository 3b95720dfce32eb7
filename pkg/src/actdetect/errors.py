"""Exception and warning types shared across the package."""


class ActdetectError(Exception):
    """Base class for all errors raised by this package."""


# --- ingest ---

class MissingHeader(ActdetectError):
    pass


class MalformedRow(ActdetectError):
    pass


class NonMonotoneTimestamps(ActdetectError):
    pass


class DuplicateTimestamp(ActdetectError):
    pass


class NegativePower(ActdetectError):
    pass


class InvalidLoadTable(ActdetectError):
    pass


class NoOverlap(ActdetectError):
    pass


class AllGaps(ActdetectError):
    pass


class UnknownAppliance(ActdetectError):
    pass


class OverlappingActivityMap(ActdetectError):
    pass


# --- features ---

class WrongWindowLength(ActdetectError):
    pass


class MissingTemperature(ActdetectError):
    pass


class EmptyMatrix(ActdetectError):
    pass


# --- svm ---

class NotStandardized(ActdetectError):
    pass


class DimensionMismatch(ActdetectError):
    pass


class VersionMismatch(ActdetectError):
    pass


class MalformedModelFile(ActdetectError):
    pass


# --- evaluate ---

class TooFewWindows(ActdetectError):
    pass


class TimestampMismatch(ActdetectError):
    pass


class EmptyCounts(ActdetectError):
    pass


class UndefinedMetric(ActdetectError):
    pass


# --- activity_model ---

class NoCompleteDays(ActdetectError):
    pass


class GridMismatch(ActdetectError):
    pass


class SequenceTooShort(ActdetectError):
    pass


class ReducibleChain(ActdetectError):
    pass


class ZeroRow(ActdetectError):
    pass


# --- synth ---

class InvalidConfig(ActdetectError):
    pass


class InvalidPeriod(ActdetectError):
    pass


# --- warnings ---

class IncompleteWindowWarning(UserWarning):
    """A trailing partial window was dropped rather than labeled."""


class SingleClassWarning(UserWarning):
    """Training data contained a single class; a constant classifier was fit."""


class SkippedMethodWarning(UserWarning):
    """An ablation method was skipped because its inputs were unavailable."""
