from typing import Optional


class VqtkError(Exception):
    """Base class for every failure the toolkit reports on purpose.

    ``exit_code`` is the process exit status the CLI uses for the error family.
    """

    exit_code = 1

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


# USAGE (exit 2)
class UsageError(VqtkError):
    exit_code = 2


# DATA (exit 3)
class DataError(VqtkError):
    exit_code = 3


class DimensionMismatch(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class CodeOutOfRange(DataError):
    pass


class EmptyData(DataError):
    pass


class InsufficientData(DataError):
    pass


class NotStochastic(DataError):
    pass


class InvalidFeatureMap(DataError):
    pass


class InvalidCodebook(DataError):
    pass


class InvalidTokenGrid(DataError):
    pass


class FormatError(DataError):
    """A binary file violates its format; ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int, path: Optional[str] = None):
        location = f"{path}: " if path else ""
        super().__init__(f"{location}{message} (at byte offset {offset})")
        self.offset = offset
        self.path = path


class BadMagic(FormatError):
    pass


class UnsupportedVersion(FormatError):
    pass


class Truncated(FormatError):
    pass


class NonFiniteValue(FormatError):
    pass


class DimensionOverflow(FormatError):
    pass


class TrailingBytes(FormatError):
    pass


# NUMERIC (exit 4)
class NumericError(VqtkError):
    exit_code = 4


class NearZeroNorm(NumericError):
    pass


class MatrixSqrtError(NumericError):
    pass


class NotPositiveSemiDefinite(NumericError):
    pass


class ZeroProbability(NumericError):
    pass


# IO (exit 5)
class IoError(VqtkError):
    exit_code = 5
