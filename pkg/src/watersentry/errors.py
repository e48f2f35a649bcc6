"""Exception hierarchy shared across the package.

Every error raised by library code derives from :class:`WatersentryError`
so callers can catch package failures with a single except clause.  The
classes also subclass the closest built-in (``ValueError`` for bad data or
arguments, ``ArithmeticError`` for numerical breakdowns) so generic
handlers keep working.
"""


class WatersentryError(Exception):
    """Base class for all package-specific errors."""


class CsvParseError(WatersentryError, ValueError):
    """A CSV cell or row could not be interpreted; message names the line."""


class SchemaError(WatersentryError, ValueError):
    """A required column or field is missing or unrecognised."""


class OrderingError(WatersentryError, ValueError):
    """Timestamps are not strictly increasing."""


class UnfixableChannelError(WatersentryError, ValueError):
    """A channel has no observed value anywhere, so gap filling cannot run."""


class SizeError(WatersentryError, ValueError):
    """The input has too few rows for the requested operation."""


class DegenerateInputError(WatersentryError, ValueError):
    """The input is constant or otherwise carries no usable variation."""


class DegenerateLabelsError(WatersentryError, ValueError):
    """The label vector contains a single class where two are required."""


class NumericalError(WatersentryError, ArithmeticError):
    """A numerical procedure broke down; message names the condition."""


class ShapeError(WatersentryError, ValueError):
    """An array has the wrong width or length for the fitted object."""


class InsufficientMinorityError(WatersentryError, ValueError):
    """Too few minority rows for the requested neighbour computation."""


class StratificationError(WatersentryError, ValueError):
    """A class has fewer members than the requested number of folds."""


class TaskSyntaxError(WatersentryError, ValueError):
    """A task script failed to parse; carries line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class TaskValidationError(WatersentryError, ValueError):
    """A task script parsed but its parameters are inconsistent."""


class LineProtocolError(WatersentryError, ValueError):
    """A line-protocol record is malformed."""


class ScoringError(WatersentryError, ValueError):
    """A window batch cannot be scored against the model's schema."""


class ModelFormatError(WatersentryError, ValueError):
    """A persisted model file has an unknown format or version."""
