"""Timestamped multi-channel frames: CSV interchange, gap repair, splits.

A :class:`TimeSeriesFrame` is the immutable in-memory form of the sensor
CSV interchange format: a strictly increasing minute-level time axis, nine
numeric channels, a boolean event label per row, and a mask marking cells
that were empty or unreadable in the source file.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime
from fractions import Fraction

import numpy as np

from .errors import (
    CsvParseError,
    OrderingError,
    SchemaError,
    SizeError,
    UnfixableChannelError,
)

CHANNELS: tuple[str, ...] = (
    "Tp", "Cl", "pH", "Redox", "Leit", "Trueb", "Cl_2", "Fm", "Fm_2",
)

# Legacy exports of the same sensors use these spellings.
CHANNEL_ALIASES: dict[str, str] = {"Temp": "Tp", "Turbid": "Trueb"}

TIME_COLUMN = "Time"
LABEL_COLUMN = "EVENT"
TIME_FORMAT = "%Y-%m-%d %H:%M:%S"

_TRUE_LITERALS = frozenset({"true", "1"})
_FALSE_LITERALS = frozenset({"false", "0"})


def canonical_channel(name: str) -> str:
    """Map a header spelling to its canonical channel name."""
    return CHANNEL_ALIASES.get(name, name)


@dataclass(frozen=True, eq=False)
class TimeSeriesFrame:
    """Immutable labelled sensor frame.

    Attributes
    ----------
    timestamps : np.ndarray
        Strictly increasing, dtype ``datetime64[s]``, shape ``(n,)``.
    channel_names : tuple[str, ...]
        Column order of ``values``.
    values : np.ndarray
        Float matrix, shape ``(n, len(channel_names))``.  Cells flagged in
        ``missing_mask`` hold NaN.
    labels : np.ndarray
        Boolean event labels, shape ``(n,)``.
    missing_mask : np.ndarray
        Boolean matrix, same shape as ``values``; True marks a cell that
        was empty or unreadable.
    """

    timestamps: np.ndarray
    channel_names: tuple[str, ...]
    values: np.ndarray
    labels: np.ndarray
    missing_mask: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype="datetime64[s]")
        vals = np.asarray(self.values, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=bool)
        mask = np.asarray(self.missing_mask, dtype=bool)
        names = tuple(self.channel_names)
        n = ts.shape[0]
        if vals.shape != (n, len(names)):
            raise ValueError(
                f"values shape {vals.shape} does not match "
                f"{n} rows x {len(names)} channels"
            )
        if labels.shape != (n,):
            raise ValueError("labels length does not match row count")
        if mask.shape != vals.shape:
            raise ValueError("missing_mask shape does not match values")
        if n > 1 and not np.all(ts[1:] > ts[:-1]):
            bad = int(np.flatnonzero(ts[1:] <= ts[:-1])[0]) + 1
            raise OrderingError(
                f"timestamps must be strictly increasing (row {bad + 1})"
            )
        nan_cells = np.isnan(vals)
        if np.any(nan_cells & ~mask):
            raise ValueError("NaN value in a cell not flagged as missing")
        for arr in (ts, vals, labels, mask):
            arr.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "channel_names", names)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "missing_mask", mask)

    @property
    def n_rows(self) -> int:
        return int(self.timestamps.shape[0])

    def channel(self, name: str) -> np.ndarray:
        """Return one channel's column (read-only view)."""
        name = canonical_channel(name)
        if name not in self.channel_names:
            raise SchemaError(f"unknown channel {name!r}")
        return self.values[:, self.channel_names.index(name)]

    def take(self, start: int, stop: int) -> "TimeSeriesFrame":
        """Contiguous row slice as a new frame."""
        return TimeSeriesFrame(
            self.timestamps[start:stop],
            self.channel_names,
            self.values[start:stop],
            self.labels[start:stop],
            self.missing_mask[start:stop],
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeriesFrame):
            return NotImplemented
        return (
            self.channel_names == other.channel_names
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.missing_mask, other.missing_mask)
            and np.array_equal(self.values, other.values, equal_nan=True)
        )


@dataclass(frozen=True)
class SplitSpec:
    """How to carve a frame into train and holdout parts.

    ``holdout_fraction`` is the trailing share of rows withheld; the split
    is strictly chronological so training rows always precede holdout
    rows.
    """

    holdout_fraction: float = 0.2
    mode: str = "chronological"

    def __post_init__(self):
        if self.mode != "chronological":
            raise ValueError(f"unknown split mode {self.mode!r}")
        f = self.holdout_fraction
        if not (isinstance(f, (int, float)) and math.isfinite(f) and 0.0 < f < 1.0):
            raise ValueError("holdout_fraction must lie strictly between 0 and 1")


def parse_csv(path, schema: tuple[str, ...] = CHANNELS) -> TimeSeriesFrame:
    """Read the sensor CSV interchange format.

    The header must name the time column, every channel in ``schema``
    (legacy aliases accepted), and the label column.  Empty or unreadable
    numeric cells become missing-mask entries rather than errors; a bad
    timestamp or label is an error naming the offending line.
    """
    schema = tuple(canonical_channel(c) for c in schema)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("empty file: no header row") from None
        columns = [canonical_channel(h.strip()) for h in header]
        if TIME_COLUMN not in columns:
            raise SchemaError(f"missing required column {TIME_COLUMN!r}")
        if LABEL_COLUMN not in columns:
            raise SchemaError(f"missing required column {LABEL_COLUMN!r}")
        missing = [c for c in schema if c not in columns]
        if missing:
            raise SchemaError(f"missing required column(s): {', '.join(missing)}")
        time_i = columns.index(TIME_COLUMN)
        label_i = columns.index(LABEL_COLUMN)
        chan_i = [columns.index(c) for c in schema]
        width = len(columns)

        times: list[datetime] = []
        rows: list[list[float]] = []
        masks: list[list[bool]] = []
        labels: list[bool] = []
        for row in reader:
            line = reader.line_num
            if len(row) != width:
                raise CsvParseError(
                    f"line {line}: expected {width} cells, found {len(row)}"
                )
            raw_time = row[time_i].strip()
            try:
                t = datetime.strptime(raw_time, TIME_FORMAT)
            except ValueError:
                raise CsvParseError(
                    f"line {line}: bad timestamp {raw_time!r}"
                ) from None
            raw_label = row[label_i].strip().lower()
            if raw_label in _TRUE_LITERALS:
                lab = True
            elif raw_label in _FALSE_LITERALS:
                lab = False
            else:
                raise CsvParseError(
                    f"line {line}: bad label {row[label_i].strip()!r}"
                )
            vals = []
            mask = []
            for ci in chan_i:
                cell = row[ci].strip()
                if cell == "":
                    vals.append(math.nan)
                    mask.append(True)
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    v = math.nan
                if math.isfinite(v):
                    vals.append(v)
                    mask.append(False)
                else:
                    # Unreadable and non-finite cells are both treated as
                    # gaps so downstream numerics only ever see finite data.
                    vals.append(math.nan)
                    mask.append(True)
            times.append(t)
            rows.append(vals)
            labels.append(lab)
            masks.append(mask)

    n = len(times)
    ts = np.array(times, dtype="datetime64[s]")
    if n > 1:
        bad = np.flatnonzero(ts[1:] <= ts[:-1])
        if bad.size:
            raise OrderingError(
                f"line {int(bad[0]) + 3}: timestamp not after the previous row"
            )
    values = np.array(rows, dtype=np.float64).reshape(n, len(schema))
    mask_arr = np.array(masks, dtype=bool).reshape(n, len(schema))
    return TimeSeriesFrame(ts, schema, values, np.array(labels, dtype=bool), mask_arr)


def serialize_csv(frame: TimeSeriesFrame, path) -> None:
    """Write a frame back to the CSV interchange format.

    Numeric cells use ``repr`` so finite values survive a parse round trip
    bit for bit; missing cells serialize as empty strings.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([TIME_COLUMN, *frame.channel_names, LABEL_COLUMN])
        times = frame.timestamps.astype("datetime64[s]").astype(object)
        for i in range(frame.n_rows):
            cells: list[str] = [times[i].strftime(TIME_FORMAT)]
            for j in range(len(frame.channel_names)):
                if frame.missing_mask[i, j]:
                    cells.append("")
                else:
                    cells.append(repr(float(frame.values[i, j])))
            cells.append("True" if frame.labels[i] else "False")
            writer.writerow(cells)


def fill_missing(frame: TimeSeriesFrame) -> TimeSeriesFrame:
    """Repair gaps by carrying the last observed value forward.

    Rows before every channel has seen at least one value are dropped, so
    the result has no missing cells at all.  A channel with no observed
    value anywhere cannot be repaired and raises.  The operation is
    idempotent: a frame without gaps comes back equal.
    """
    mask = frame.missing_mask
    n, d = mask.shape
    observed = ~mask
    for j, name in enumerate(frame.channel_names):
        if not observed[:, j].any():
            raise UnfixableChannelError(
                f"channel {name!r} has no observed values"
            )
    first_valid = observed.argmax(axis=0)
    start = int(first_valid.max())
    sub = frame.take(start, n)
    if not sub.missing_mask.any():
        return sub
    m = sub.missing_mask
    vals = sub.values.copy()
    rows = np.arange(vals.shape[0])[:, None]
    src = np.where(~m, rows, 0)
    np.maximum.accumulate(src, axis=0, out=src)
    vals = vals[src, np.arange(d)[None, :]]
    return TimeSeriesFrame(
        sub.timestamps,
        sub.channel_names,
        vals,
        sub.labels,
        np.zeros_like(m),
    )


def chronological_split(
    frame: TimeSeriesFrame, spec: SplitSpec = SplitSpec()
) -> tuple[TimeSeriesFrame, TimeSeriesFrame]:
    """Split a frame into a leading train part and trailing holdout.

    The train part receives ``ceil((1 - holdout_fraction) * n)`` rows; the
    fraction is taken through exact rational arithmetic so borderline
    products like ``0.8 * 10`` cannot round the boundary up.
    """
    if frame.n_rows == 0:
        raise SizeError("cannot split an empty frame")
    f = Fraction(str(float(spec.holdout_fraction)))
    n_train = math.ceil((1 - f) * frame.n_rows)
    return frame.take(0, n_train), frame.take(n_train, frame.n_rows)
