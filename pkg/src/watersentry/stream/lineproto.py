"""Minimal line-protocol records: ``measurement field=value,... ts_ns``.

One point per line, numeric fields only, whole-line nanosecond
timestamps.  Tags and escaped characters are not supported; a comma in
the measurement token is rejected explicitly so the omission is loud.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import LineProtocolError


@dataclass(frozen=True)
class DataPoint:
    """One timestamped set of field values."""

    ts_ns: int
    fields: dict[str, float]


def parse_line(text: str) -> tuple[str, DataPoint]:
    """Parse one record; returns the measurement and the point."""
    parts = text.split()
    if len(parts) != 3:
        raise LineProtocolError(
            f"expected 'measurement fields timestamp', got {len(parts)} token(s)"
        )
    measurement, field_blob, ts_text = parts
    if "," in measurement:
        raise LineProtocolError("tags are not supported; measurement must be bare")
    if not measurement:
        raise LineProtocolError("empty measurement name")
    fields: dict[str, float] = {}
    for item in field_blob.split(","):
        name, eq, raw = item.partition("=")
        if not eq or not name:
            raise LineProtocolError(f"bad field {item!r}; expected name=value")
        if name in fields:
            raise LineProtocolError(f"duplicate field {name!r}")
        try:
            value = float(raw)
        except ValueError:
            raise LineProtocolError(f"bad numeric value {raw!r} for field {name!r}") from None
        fields[name] = value
    if not fields:
        raise LineProtocolError("a point needs at least one field")
    try:
        ts = int(ts_text)
    except ValueError:
        raise LineProtocolError(f"bad timestamp {ts_text!r}") from None
    return measurement, DataPoint(ts_ns=ts, fields=fields)


def format_line(measurement: str, point: DataPoint) -> str:
    """Inverse of :func:`parse_line`; floats keep full precision."""
    if not measurement or "," in measurement or " " in measurement:
        raise LineProtocolError(f"bad measurement name {measurement!r}")
    if not point.fields:
        raise LineProtocolError("a point needs at least one field")
    for name in point.fields:
        if not name or any(c in name for c in ' ,="'):
            raise LineProtocolError(f"bad field name {name!r}")
    blob = ",".join(f"{name}={float(v)!r}" for name, v in point.fields.items())
    return f"{measurement} {blob} {point.ts_ns}"
