"""Parser for the pipe-style stream task script.

A task wires a measurement stream through a sliding window into an HTTP
output endpoint::

    stream
        |from("water")
        |window(5d, 2h)
        |httpOut("batch")

``window(period, every)`` keeps the trailing ``period`` of points and
emits a batch every ``every``; ``period == every`` makes the window
tumbling.  Durations are integer counts with units ns, ms, s, m, h, d, w.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import TaskSyntaxError, TaskValidationError

DURATION_UNITS_NS: dict[str, int] = {
    "ns": 1,
    "ms": 1_000_000,
    "s": 1_000_000_000,
    "m": 60 * 1_000_000_000,
    "h": 3600 * 1_000_000_000,
    "d": 86_400 * 1_000_000_000,
    "w": 7 * 86_400 * 1_000_000_000,
}

_NODE_ORDER = ("from", "window", "httpOut")


@dataclass(frozen=True)
class StreamTaskSpec:
    """Validated task: what to read, how to window, where to expose it."""

    measurement: str
    period_ns: int
    every_ns: int
    out_name: str

    def __post_init__(self):
        if not self.measurement:
            raise TaskValidationError("measurement name must be non-empty")
        if not self.out_name:
            raise TaskValidationError("output endpoint name must be non-empty")
        if self.every_ns <= 0:
            raise TaskValidationError("emit interval must be positive")
        if self.period_ns < self.every_ns:
            raise TaskValidationError(
                "window period must be at least the emit interval"
            )

    @property
    def out_path(self) -> str:
        return "/" + self.out_name


@dataclass(frozen=True)
class _Token:
    kind: str  # ident | string | duration | number | punct | end
    value: object
    line: int
    column: int


def parse_duration(text: str) -> int:
    """Duration literal to nanoseconds (e.g. ``"5d"`` or ``"2h"``)."""
    i = 0
    while i < len(text) and text[i].isdigit():
        i += 1
    if i == 0 or i == len(text):
        raise ValueError(f"bad duration literal {text!r}")
    unit = text[i:]
    if unit not in DURATION_UNITS_NS:
        raise ValueError(f"unknown duration unit {unit!r} in {text!r}")
    return int(text[:i]) * DURATION_UNITS_NS[unit]


def format_duration(ns: int) -> str:
    """Nanoseconds back to the largest unit that divides them evenly."""
    for unit in ("w", "d", "h", "m", "s", "ms", "ns"):
        size = DURATION_UNITS_NS[unit]
        if ns % size == 0 and ns // size > 0:
            return f"{ns // size}{unit}"
    return f"{ns}ns"


def _tokenize(script: str) -> list[_Token]:
    tokens: list[_Token] = []
    line = 1
    col = 1
    i = 0
    n = len(script)
    while i < n:
        ch = script[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            col += 1
            i += 1
            continue
        start_line, start_col = line, col
        if ch in "|(),":
            tokens.append(_Token("punct", ch, start_line, start_col))
            i += 1
            col += 1
            continue
        if ch == '"':
            j = i + 1
            while j < n and script[j] != '"':
                if script[j] == "\n":
                    raise TaskSyntaxError("unterminated string", start_line, start_col)
                j += 1
            if j >= n:
                raise TaskSyntaxError("unterminated string", start_line, start_col)
            tokens.append(_Token("string", script[i + 1 : j], start_line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        if ch.isdigit():
            j = i
            while j < n and (script[j].isdigit() or script[j] == "."):
                j += 1
            k = j
            while k < n and script[k].isalpha():
                k += 1
            text = script[i:k]
            if k > j:  # unit suffix present
                if "." in script[i:j]:
                    raise TaskSyntaxError(
                        f"fractional durations are not supported: {text!r}",
                        start_line,
                        start_col,
                    )
                try:
                    ns = parse_duration(text)
                except ValueError as exc:
                    raise TaskSyntaxError(str(exc), start_line, start_col) from None
                tokens.append(_Token("duration", ns, start_line, start_col))
            else:
                try:
                    num = float(text) if "." in text else int(text)
                except ValueError:
                    raise TaskSyntaxError(
                        f"bad number literal {text!r}", start_line, start_col
                    ) from None
                tokens.append(_Token("number", num, start_line, start_col))
            col += k - i
            i = k
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (script[j].isalnum() or script[j] == "_"):
                j += 1
            tokens.append(_Token("ident", script[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        raise TaskSyntaxError(f"unexpected character {ch!r}", start_line, start_col)
    tokens.append(_Token("end", None, line, col))
    return tokens


def parse_task(script: str) -> StreamTaskSpec:
    """Parse and validate a task script.

    Syntax problems raise with line and column; a script that parses but
    asks for an impossible window raises a validation error.
    """
    tokens = _tokenize(script)
    pos = 0

    def cur() -> _Token:
        return tokens[pos]

    def take(kind: str, what: str) -> _Token:
        nonlocal pos
        tok = tokens[pos]
        if tok.kind != kind:
            raise TaskSyntaxError(
                f"expected {what}, found {tok.value!r}", tok.line, tok.column
            )
        pos += 1
        return tok

    head = take("ident", "'stream' source")
    if head.value != "stream":
        raise TaskSyntaxError(
            f"task must start with 'stream', found {head.value!r}",
            head.line,
            head.column,
        )

    nodes: list[tuple[str, list[_Token], _Token]] = []
    while cur().kind == "punct" and cur().value == "|":
        pos += 1
        name_tok = take("ident", "node name")
        open_tok = cur()
        if not (open_tok.kind == "punct" and open_tok.value == "("):
            raise TaskSyntaxError(
                f"expected '(' after node {name_tok.value!r}",
                open_tok.line,
                open_tok.column,
            )
        pos += 1
        args: list[_Token] = []
        if not (cur().kind == "punct" and cur().value == ")"):
            while True:
                tok = cur()
                if tok.kind not in ("string", "duration", "number"):
                    raise TaskSyntaxError(
                        f"expected argument, found {tok.value!r}", tok.line, tok.column
                    )
                args.append(tok)
                pos += 1
                if cur().kind == "punct" and cur().value == ",":
                    pos += 1
                    continue
                break
        close_tok = cur()
        if not (close_tok.kind == "punct" and close_tok.value == ")"):
            raise TaskSyntaxError(
                "expected ')' or ','", close_tok.line, close_tok.column
            )
        pos += 1
        nodes.append((str(name_tok.value), args, name_tok))
    tail = cur()
    if tail.kind != "end":
        raise TaskSyntaxError(
            f"expected '|' or end of script, found {tail.value!r}",
            tail.line,
            tail.column,
        )

    seen: dict[str, tuple[list[_Token], _Token]] = {}
    for name, args, tok in nodes:
        if name not in _NODE_ORDER:
            raise TaskSyntaxError(f"unknown node {name!r}", tok.line, tok.column)
        if name in seen:
            raise TaskSyntaxError(f"duplicate node {name!r}", tok.line, tok.column)
        seen[name] = (args, tok)
    for required in _NODE_ORDER:
        if required not in seen:
            raise TaskSyntaxError(
                f"missing required node {required!r}", tail.line, tail.column
            )
    if [n for n, _, _ in nodes] != list(_NODE_ORDER):
        first = nodes[0][2]
        raise TaskSyntaxError(
            "nodes must appear in the order from, window, httpOut",
            first.line,
            first.column,
        )

    def one_string(name: str) -> str:
        args, tok = seen[name]
        if len(args) != 1 or args[0].kind != "string":
            raise TaskSyntaxError(
                f"node {name!r} takes exactly one string argument",
                tok.line,
                tok.column,
            )
        return str(args[0].value)

    w_args, w_tok = seen["window"]
    if len(w_args) != 2 or any(a.kind != "duration" for a in w_args):
        raise TaskSyntaxError(
            "node 'window' takes exactly two duration arguments",
            w_tok.line,
            w_tok.column,
        )
    return StreamTaskSpec(
        measurement=one_string("from"),
        period_ns=int(w_args[0].value),
        every_ns=int(w_args[1].value),
        out_name=one_string("httpOut"),
    )
