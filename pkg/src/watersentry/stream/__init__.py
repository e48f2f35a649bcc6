"""Windowed stream emulation: task scripts, ingest, emission, scoring."""

from .engine import (
    AnomalyAlert,
    IngestAck,
    ReplayResult,
    ScoreRunner,
    StreamEngine,
    WindowBatch,
    alerts_doc,
    alerts_json,
    points_from_frame,
    replay_frame,
    score_stream,
)
from .httpout import (
    ParsedSeries,
    build_payload,
    parse_payload,
    parse_rfc3339,
    payload_json,
    rfc3339_ns,
)
from .lineproto import DataPoint, format_line, parse_line
from .server import StreamHttpServer
from .task import (
    DURATION_UNITS_NS,
    StreamTaskSpec,
    format_duration,
    parse_duration,
    parse_task,
)

__all__ = [
    "AnomalyAlert",
    "DURATION_UNITS_NS",
    "DataPoint",
    "IngestAck",
    "ParsedSeries",
    "ReplayResult",
    "ScoreRunner",
    "StreamEngine",
    "StreamHttpServer",
    "StreamTaskSpec",
    "WindowBatch",
    "alerts_doc",
    "alerts_json",
    "build_payload",
    "format_duration",
    "format_line",
    "parse_duration",
    "parse_line",
    "parse_payload",
    "parse_rfc3339",
    "parse_task",
    "payload_json",
    "points_from_frame",
    "replay_frame",
    "rfc3339_ns",
    "score_stream",
]
