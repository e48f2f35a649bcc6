"""JSON serialization of window batches for the HTTP output endpoint.

The payload mirrors a time-series database query response: one series
with a ``time`` column (RFC 3339, UTC ``Z`` suffix, nanosecond precision)
followed by the channel columns::

    {"series": [{"name": "water",
                 "columns": ["time", "Tp", ...],
                 "values": [["2016-02-15T00:00:00Z", 8.3, ...], ...]}]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timedelta

from ..errors import ScoringError
from .lineproto import DataPoint

_EPOCH = datetime(1970, 1, 1)
_NS = 1_000_000_000


def rfc3339_ns(ts_ns: int) -> str:
    """Nanosecond timestamp to RFC 3339 text; trailing zeros trimmed."""
    secs, frac = divmod(int(ts_ns), _NS)
    base = (_EPOCH + timedelta(seconds=secs)).strftime("%Y-%m-%dT%H:%M:%S")
    if frac == 0:
        return base + "Z"
    digits = f"{frac:09d}".rstrip("0")
    return f"{base}.{digits}Z"


def parse_rfc3339(text: str) -> int:
    """Inverse of :func:`rfc3339_ns`."""
    if not text.endswith("Z"):
        raise ValueError(f"timestamp must end with 'Z': {text!r}")
    body = text[:-1]
    frac_ns = 0
    if "." in body:
        body, _, frac = body.partition(".")
        if not (1 <= len(frac) <= 9) or not frac.isdigit():
            raise ValueError(f"bad fractional seconds in {text!r}")
        frac_ns = int(frac.ljust(9, "0"))
    t = datetime.strptime(body, "%Y-%m-%dT%H:%M:%S")
    return int((t - _EPOCH).total_seconds()) * _NS + frac_ns


def build_payload(name: str, columns: tuple[str, ...], points) -> dict:
    """Series document for a sequence of points.

    A point missing one of ``columns`` serializes that cell as null.
    """
    values = []
    for p in points:
        row: list = [rfc3339_ns(p.ts_ns)]
        for c in columns:
            v = p.fields.get(c)
            row.append(None if v is None else float(v))
        values.append(row)
    return {
        "series": [
            {"name": name, "columns": ["time", *columns], "values": values}
        ]
    }


def payload_json(payload: dict) -> str:
    return json.dumps(payload, separators=(",", ":"))


@dataclass(frozen=True)
class ParsedSeries:
    name: str
    columns: tuple[str, ...]
    points: tuple[DataPoint, ...]


def parse_payload(doc) -> ParsedSeries:
    """Rebuild points from a series document (or its JSON text)."""
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    try:
        series = doc["series"][0]
        name = series["name"]
        columns = list(series["columns"])
        values = series["values"]
    except (KeyError, IndexError, TypeError) as exc:
        raise ScoringError(f"malformed series document: {exc}") from exc
    if not columns or columns[0] != "time":
        raise ScoringError("series document must lead with a 'time' column")
    channels = tuple(columns[1:])
    points = []
    for row in values:
        ts = parse_rfc3339(row[0])
        fields = {
            c: float(v) for c, v in zip(channels, row[1:]) if v is not None
        }
        points.append(DataPoint(ts_ns=ts, fields=fields))
    return ParsedSeries(name=name, columns=channels, points=tuple(points))
