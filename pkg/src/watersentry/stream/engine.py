"""In-memory stream buffer with sliding-window emission and scoring.

The engine emulates a small ingest-window-emit pipeline: points arrive
(in any order) into a per-measurement buffer with last-write-wins
semantics on duplicate timestamps, and a window node periodically emits
the trailing ``period`` of points.  Batch ends advance by exactly
``every``; in virtual-clock mode the data's own timestamps drive the
clock, so replaying a recorded frame is fully deterministic.
"""

from __future__ import annotations

import json
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

import numpy as np

from ..errors import ScoringError, SchemaError
from ..models.persist import model_id as _model_id
from .httpout import rfc3339_ns
from .lineproto import DataPoint, parse_line
from .task import StreamTaskSpec


@dataclass(frozen=True)
class WindowBatch:
    """Points with timestamps in ``(window_end - period, window_end]``."""

    window_end_ns: int
    points: tuple[DataPoint, ...]


@dataclass(frozen=True)
class IngestAck:
    """What one accepted write did to the buffer."""

    measurement: str
    buffered: int
    overwrites: int


@dataclass(frozen=True)
class AnomalyAlert:
    """A positive prediction for one timestamp."""

    ts_ns: int
    fields: dict[str, float]
    model: str

    def to_doc(self) -> dict:
        return {
            "time": rfc3339_ns(self.ts_ns),
            "predicted": True,
            "model": self.model,
            "fields": {k: float(v) for k, v in self.fields.items()},
        }


@dataclass(frozen=True, eq=False)
class ReplayResult:
    batches: tuple[WindowBatch, ...]
    alerts: tuple[AnomalyAlert, ...]
    overwrites: int


class _Series:
    """Sorted point store for one measurement."""

    __slots__ = ("ts", "points", "overwrites")

    def __init__(self):
        self.ts: list[int] = []
        self.points: list[DataPoint] = []
        self.overwrites = 0

    def insert(self, point: DataPoint) -> None:
        i = bisect_left(self.ts, point.ts_ns)
        if i < len(self.ts) and self.ts[i] == point.ts_ns:
            self.points[i] = point  # last write wins
            self.overwrites += 1
        else:
            self.ts.insert(i, point.ts_ns)
            self.points.insert(i, point)

    def window(self, start_excl: int, end_incl: int) -> tuple[DataPoint, ...]:
        lo = bisect_right(self.ts, start_excl)
        hi = bisect_right(self.ts, end_incl)
        return tuple(self.points[lo:hi])


class StreamEngine:
    """Buffer plus window emission for one task.

    ``on_batch`` (if given) is called with every emitted batch.  In
    strict-schema mode a write to the task's measurement missing any
    schema channel is rejected.
    """

    def __init__(
        self,
        task: StreamTaskSpec,
        schema: tuple[str, ...] | None = None,
        strict: bool = False,
        on_batch=None,
    ):
        if strict and schema is None:
            raise ValueError("strict mode needs a schema to enforce")
        self.task = task
        self.schema = tuple(schema) if schema is not None else None
        self.strict = strict
        self.on_batch = on_batch
        self._series: dict[str, _Series] = {}
        self._last_emit_ns: int | None = None
        self._next_emit_ns: int | None = None
        self.emitted: list[WindowBatch] = []

    # -- ingest ---------------------------------------------------------

    def ingest_line(self, line: str) -> IngestAck:
        measurement, point = parse_line(line)
        return self.ingest_point(measurement, point)

    def ingest_point(self, measurement: str, point: DataPoint) -> IngestAck:
        if (
            self.strict
            and measurement == self.task.measurement
        ):
            missing = [c for c in self.schema if c not in point.fields]
            if missing:
                raise SchemaError(
                    f"point at {point.ts_ns} is missing channel(s): "
                    + ", ".join(missing)
                )
        series = self._series.setdefault(measurement, _Series())
        series.insert(point)
        return IngestAck(
            measurement=measurement,
            buffered=len(series.ts),
            overwrites=series.overwrites,
        )

    @property
    def overwrites(self) -> int:
        return sum(s.overwrites for s in self._series.values())

    def buffered(self, measurement: str | None = None) -> int:
        if measurement is None:
            measurement = self.task.measurement
        series = self._series.get(measurement)
        return 0 if series is None else len(series.ts)

    # -- windowing ------------------------------------------------------

    def window_batch(self, now_ns: int) -> WindowBatch:
        """The trailing window as of ``now_ns`` (no emission gate)."""
        series = self._series.get(self.task.measurement)
        points = (
            () if series is None
            else series.window(now_ns - self.task.period_ns, now_ns)
        )
        return WindowBatch(window_end_ns=now_ns, points=points)

    def emit(self, now_ns: int) -> WindowBatch | None:
        """Emit iff at least ``every`` has passed since the last emission.

        The first call always emits.  Returns the batch or None.
        """
        if (
            self._last_emit_ns is not None
            and now_ns - self._last_emit_ns < self.task.every_ns
        ):
            return None
        batch = self.window_batch(now_ns)
        self._last_emit_ns = now_ns
        self.emitted.append(batch)
        if self.on_batch is not None:
            self.on_batch(batch)
        return batch

    @property
    def latest_batch(self) -> WindowBatch | None:
        return self.emitted[-1] if self.emitted else None

    # -- virtual clock ----------------------------------------------------

    def feed(self, measurement: str, point: DataPoint) -> IngestAck:
        """Ingest under the virtual clock: batch boundaries strictly
        before this point's timestamp are emitted first, so emission
        order never depends on wall time."""
        if measurement == self.task.measurement:
            if self._next_emit_ns is None:
                self._next_emit_ns = point.ts_ns + self.task.every_ns
            else:
                while self._next_emit_ns < point.ts_ns:
                    self.emit(self._next_emit_ns)
                    self._next_emit_ns += self.task.every_ns
        return self.ingest_point(measurement, point)

    def feed_line(self, line: str) -> IngestAck:
        measurement, point = parse_line(line)
        return self.feed(measurement, point)

    def flush(self, up_to_ns: int | None = None) -> None:
        """Emit every pending boundary at or before ``up_to_ns``.

        Without an explicit bound the buffer is drained completely: after
        the grid boundaries up to the newest buffered timestamp, any
        trailing points beyond the last boundary get one final batch at
        the next grid position, so every buffered point lands in at least
        one emission.
        """
        if self._next_emit_ns is None:
            return
        series = self._series.get(self.task.measurement)
        newest = series.ts[-1] if series is not None and series.ts else None
        drain = up_to_ns is None
        if drain:
            if newest is None:
                return
            up_to_ns = newest
        while self._next_emit_ns <= up_to_ns:
            self.emit(self._next_emit_ns)
            self._next_emit_ns += self.task.every_ns
        if drain and (self._last_emit_ns is None or newest > self._last_emit_ns):
            self.emit(self._next_emit_ns)
            self._next_emit_ns += self.task.every_ns


def score_stream(model, batch: WindowBatch, prev_point: DataPoint | None = None):
    """Alerts for one batch: consecutive points are differenced per
    channel and the model scores each difference row.

    The first point of the batch can only be scored against
    ``prev_point`` (the point just before the window); without it that
    row is skipped, matching offline differencing which consumes the
    first row.
    """
    channels = model.feature_names
    rows = list(batch.points)
    if prev_point is not None:
        rows = [prev_point] + rows
    if len(rows) < 2:
        return []
    mat = np.empty((len(rows), len(channels)))
    for i, p in enumerate(rows):
        for j, c in enumerate(channels):
            if c not in p.fields:
                raise ScoringError(
                    f"point at {p.ts_ns} is missing channel {c!r}"
                )
            mat[i, j] = p.fields[c]
    diffs = np.diff(mat, axis=0)
    flags = model.predict(diffs)
    mid = _model_id(model)
    return [
        AnomalyAlert(ts_ns=rows[i + 1].ts_ns, fields=dict(rows[i + 1].fields), model=mid)
        for i in np.flatnonzero(flags)
    ]


class ScoreRunner:
    """Stateful scorer for overlapping batches.

    Windows overlap whenever ``period > every``; the runner remembers the
    newest scored timestamp and the point before it, so every timestamp
    is scored exactly once no matter how many batches contain it.
    """

    def __init__(self, model):
        self.model = model
        self.alerts: list[AnomalyAlert] = []
        self._last_ts: int | None = None
        self._prev_point: DataPoint | None = None

    def __call__(self, batch: WindowBatch) -> list[AnomalyAlert]:
        new_points = [
            p for p in batch.points
            if self._last_ts is None or p.ts_ns > self._last_ts
        ]
        if not new_points:
            return []
        sub = WindowBatch(window_end_ns=batch.window_end_ns, points=tuple(new_points))
        fresh = score_stream(self.model, sub, prev_point=self._prev_point)
        self.alerts.extend(fresh)
        self._prev_point = new_points[-1]
        self._last_ts = new_points[-1].ts_ns
        return fresh


def points_from_frame(frame):
    """Frame rows as (ts_ns, DataPoint) pairs in time order."""
    if frame.missing_mask.any():
        raise ValueError("frame has missing cells; repair gaps before replay")
    ts_ns = frame.timestamps.astype("datetime64[ns]").astype(np.int64)
    for i in range(frame.n_rows):
        fields = {
            c: float(frame.values[i, j])
            for j, c in enumerate(frame.channel_names)
        }
        yield DataPoint(ts_ns=int(ts_ns[i]), fields=fields)


def replay_frame(
    task: StreamTaskSpec,
    frame,
    model=None,
    strict: bool = False,
) -> ReplayResult:
    """Push a frame through the engine under the virtual clock.

    Batch ends run ``first_ts + every, first_ts + 2*every, ...``; rows
    past the last grid boundary drain into one final batch, so every row
    is windowed.  Each batch is scored as it is emitted when a model is
    given, and every timestamp is scored exactly once.
    """
    runner = ScoreRunner(model) if model is not None else None
    engine = StreamEngine(
        task,
        schema=frame.channel_names,
        strict=strict,
        on_batch=runner,
    )
    for point in points_from_frame(frame):
        engine.feed(task.measurement, point)
    engine.flush()
    return ReplayResult(
        batches=tuple(engine.emitted),
        alerts=tuple(runner.alerts) if runner is not None else (),
        overwrites=engine.overwrites,
    )


def alerts_doc(alerts, run_digest: str | None = None) -> dict:
    """JSON artifact layout for a collection of alerts."""
    doc = {"alerts": [a.to_doc() for a in alerts]}
    if run_digest is not None:
        doc["run_digest"] = run_digest
    return doc


def alerts_json(alerts, run_digest: str | None = None) -> str:
    return json.dumps(alerts_doc(alerts, run_digest), sort_keys=True, indent=2)
