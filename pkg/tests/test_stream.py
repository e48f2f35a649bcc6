"""Stream pipeline tests: task scripts, wire formats, windowing, scoring.

The replay tests hold the core promise of the streaming layer to the
offline path: pushing a frame through the windowed engine must flag
exactly the rows that offline differencing and prediction flag.
"""

import json
import urllib.error
import urllib.request

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.random import SeedSequence, default_rng

from conftest import make_frame
from watersentry.errors import (
    LineProtocolError,
    SchemaError,
    ScoringError,
    TaskSyntaxError,
    TaskValidationError,
)
from watersentry.models import CostModelSpec, model_id, train
from watersentry.stream import (
    DURATION_UNITS_NS,
    AnomalyAlert,
    DataPoint,
    ScoreRunner,
    StreamEngine,
    StreamHttpServer,
    StreamTaskSpec,
    WindowBatch,
    alerts_doc,
    alerts_json,
    build_payload,
    format_duration,
    format_line,
    parse_duration,
    parse_line,
    parse_payload,
    parse_rfc3339,
    parse_task,
    payload_json,
    points_from_frame,
    replay_frame,
    rfc3339_ns,
    score_stream,
)

CANONICAL = 'stream\n    |from("water")\n    |window(5d, 2h)\n    |httpOut("batch")\n'


def toy_task(period_s=1800, every_s=600, measurement="water", out="batch"):
    return StreamTaskSpec(
        measurement=measurement,
        period_ns=period_s * 10**9,
        every_ns=every_s * 10**9,
        out_name=out,
    )


def point(ts_s: float, **fields) -> DataPoint:
    return DataPoint(ts_ns=int(ts_s * 10**9), fields={k: float(v) for k, v in fields.items()})


# ---------------------------------------------------------------------------
# durations and task scripts


class TestDurations:
    @pytest.mark.parametrize("text,ns", [
        ("1ns", 1),
        ("250ms", 250 * 10**6),
        ("30s", 30 * 10**9),
        ("5m", 300 * 10**9),
        ("2h", 7200 * 10**9),
        ("5d", 5 * 86400 * 10**9),
        ("1w", 7 * 86400 * 10**9),
    ])
    def test_parse_table(self, text, ns):
        assert parse_duration(text) == ns

    @pytest.mark.parametrize("bad", ["d", "5", "5y", "", "h5"])
    def test_parse_rejects(self, bad):
        with pytest.raises(ValueError):
            parse_duration(bad)

    def test_format_picks_largest_even_unit(self):
        assert format_duration(7200 * 10**9) == "2h"
        assert format_duration(90 * 10**9) == "90s"
        assert format_duration(7 * 86400 * 10**9) == "1w"
        assert format_duration(1) == "1ns"

    @given(
        count=st.integers(min_value=1, max_value=500),
        unit=st.sampled_from(sorted(DURATION_UNITS_NS)),
    )
    @settings(max_examples=80)
    def test_round_trip(self, count, unit):
        ns = count * DURATION_UNITS_NS[unit]
        assert parse_duration(format_duration(ns)) == ns


class TestParseTask:
    def test_canonical_script(self):
        spec = parse_task(CANONICAL)
        assert spec.measurement == "water"
        assert spec.period_ns == 5 * 86400 * 10**9
        assert spec.every_ns == 7200 * 10**9
        assert spec.out_name == "batch"
        assert spec.out_path == "/batch"

    def test_single_line_script(self):
        spec = parse_task('stream |from("x") |window(1h, 1h) |httpOut("o")')
        assert spec.measurement == "x"
        assert spec.period_ns == spec.every_ns

    def test_missing_node_is_syntax_error(self):
        with pytest.raises(TaskSyntaxError, match="missing required node 'window'"):
            parse_task('stream |from("water") |httpOut("b")')

    def test_error_carries_line_and_column(self):
        script = 'stream\n    |from("water")\n    |window(2h 5d)\n    |httpOut("b")'
        with pytest.raises(TaskSyntaxError) as err:
            parse_task(script)
        assert err.value.line == 3
        assert "line 3" in str(err.value)

    def test_unterminated_string_position(self):
        with pytest.raises(TaskSyntaxError) as err:
            parse_task('stream\n|from("water)\n|window(1h,1h)|httpOut("b")')
        assert err.value.line == 2
        assert err.value.column == 7

    def test_wrong_node_order(self):
        script = 'stream |window(5d, 2h) |from("w") |httpOut("b")'
        with pytest.raises(TaskSyntaxError, match="order"):
            parse_task(script)

    def test_duplicate_node(self):
        script = 'stream |from("a") |from("b") |window(1h,1h) |httpOut("o")'
        with pytest.raises(TaskSyntaxError, match="duplicate node 'from'"):
            parse_task(script)

    def test_unknown_node(self):
        script = 'stream |from("a") |window(1h,1h) |alert("o")'
        with pytest.raises(TaskSyntaxError, match="unknown node 'alert'"):
            parse_task(script)

    def test_fractional_duration_rejected(self):
        with pytest.raises(TaskSyntaxError, match="fractional"):
            parse_task('stream |from("a") |window(1.5h, 1h) |httpOut("o")')

    def test_unexpected_character(self):
        with pytest.raises(TaskSyntaxError, match="unexpected character"):
            parse_task('stream ~ |from("a") |window(1h,1h) |httpOut("o")')

    def test_window_needs_two_durations(self):
        with pytest.raises(TaskSyntaxError, match="two duration"):
            parse_task('stream |from("a") |window(1h) |httpOut("o")')
        with pytest.raises(TaskSyntaxError, match="two duration"):
            parse_task('stream |from("a") |window("1h", "2h") |httpOut("o")')

    def test_from_needs_one_string(self):
        with pytest.raises(TaskSyntaxError, match="one string"):
            parse_task('stream |from(5) |window(1h,1h) |httpOut("o")')

    def test_must_start_with_stream(self):
        with pytest.raises(TaskSyntaxError, match="must start with 'stream'"):
            parse_task('batch |from("a") |window(1h,1h) |httpOut("o")')

    def test_trailing_junk(self):
        with pytest.raises(TaskSyntaxError, match="expected '\\|' or end"):
            parse_task('stream |from("a") |window(1h,1h) |httpOut("o") etc')

    def test_period_shorter_than_every_invalid(self):
        with pytest.raises(TaskValidationError, match="at least the emit interval"):
            parse_task('stream |from("a") |window(1h, 2h) |httpOut("o")')

    def test_zero_every_invalid(self):
        with pytest.raises(TaskValidationError, match="positive"):
            parse_task('stream |from("a") |window(0s, 0s) |httpOut("o")')

    def test_empty_measurement_invalid(self):
        with pytest.raises(TaskValidationError, match="non-empty"):
            parse_task('stream |from("") |window(1h,1h) |httpOut("o")')


# ---------------------------------------------------------------------------
# wire formats


class TestLineProtocol:
    def test_parse_canonical(self):
        m, p = parse_line("water Tp=34.2,Cl=0.14 1455494401000000000")
        assert m == "water"
        assert p.ts_ns == 1455494401000000000
        assert p.fields == {"Tp": 34.2, "Cl": 0.14}

    @pytest.mark.parametrize("bad", [
        "water 123",
        "water a=1 2 3",
        "water,loc=a a=1 1",
        " a=1 1",
        "water a 1",
        "water a=1,a=2 1",
        "water a=x 1",
        "water a=1 noon",
        "water =1 5",
    ])
    def test_parse_rejects(self, bad):
        with pytest.raises(LineProtocolError):
            parse_line(bad)

    def test_format_round_trip(self):
        p = point(1455494401, Tp=34.2, Cl=0.14)
        m, back = parse_line(format_line("water", p))
        assert m == "water" and back == p

    @given(
        values=st.lists(
            st.floats(allow_nan=False, allow_infinity=False, width=64),
            min_size=1, max_size=5,
        ),
        ts=st.integers(min_value=0, max_value=2**62),
    )
    @settings(max_examples=100)
    def test_round_trip_preserves_floats_exactly(self, values, ts):
        p = DataPoint(ts_ns=ts, fields={f"c{i}": v for i, v in enumerate(values)})
        m, back = parse_line(format_line("water", p))
        assert back.ts_ns == ts
        for k, v in p.fields.items():
            got = back.fields[k]
            assert got == v or (v == 0.0 and got == 0.0)

    @pytest.mark.parametrize("measurement", ["", "wa ter", "wa,ter"])
    def test_format_rejects_bad_measurement(self, measurement):
        with pytest.raises(LineProtocolError):
            format_line(measurement, point(1, a=1))

    def test_format_rejects_empty_fields_and_bad_names(self):
        with pytest.raises(LineProtocolError):
            format_line("water", DataPoint(ts_ns=1, fields={}))
        for name in ("a b", "a,b", "a=b", 'a"b', ""):
            with pytest.raises(LineProtocolError):
                format_line("water", DataPoint(ts_ns=1, fields={name: 1.0}))


class TestRfc3339:
    def test_known_instant(self):
        assert rfc3339_ns(1455494400 * 10**9) == "2016-02-15T00:00:00Z"

    def test_fraction_trimming(self):
        base = 1455494400 * 10**9
        assert rfc3339_ns(base + 1_500_000) == "2016-02-15T00:00:00.0015Z"
        assert rfc3339_ns(base + 1) == "2016-02-15T00:00:00.000000001Z"
        assert rfc3339_ns(base + 500_000_000) == "2016-02-15T00:00:00.5Z"

    @given(ts=st.integers(min_value=0, max_value=4 * 10**18))
    @settings(max_examples=150)
    def test_round_trip(self, ts):
        assert parse_rfc3339(rfc3339_ns(ts)) == ts

    @pytest.mark.parametrize("bad", [
        "2016-02-15T00:00:00",
        "2016-02-15T00:00:00.Z",
        "2016-02-15T00:00:00.0123456789Z",
        "yesterdayZ",
    ])
    def test_parse_rejects(self, bad):
        with pytest.raises(ValueError):
            parse_rfc3339(bad)


class TestSeriesPayload:
    def test_layout(self):
        pts = [point(10, a=1.0, b=2.0), point(20, a=3.0, b=4.0)]
        doc = build_payload("water", ("a", "b"), pts)
        assert set(doc) == {"series"}
        series = doc["series"][0]
        assert series["name"] == "water"
        assert series["columns"] == ["time", "a", "b"]
        assert series["values"][0] == ["1970-01-01T00:00:10Z", 1.0, 2.0]
        assert len(series["values"]) == 2

    def test_missing_field_serializes_null(self):
        doc = build_payload("water", ("a", "b"), [point(10, a=1.0)])
        assert doc["series"][0]["values"][0] == ["1970-01-01T00:00:10Z", 1.0, None]
        parsed = parse_payload(payload_json(doc))
        assert parsed.points[0].fields == {"a": 1.0}

    def test_round_trip(self):
        pts = [point(i * 60, a=float(i), b=-float(i)) for i in range(5)]
        parsed = parse_payload(payload_json(build_payload("w", ("a", "b"), pts)))
        assert parsed.name == "w"
        assert parsed.columns == ("a", "b")
        assert list(parsed.points) == pts

    @pytest.mark.parametrize("doc", [
        {},
        {"series": []},
        {"series": [{"name": "w", "columns": ["a"], "values": []}]},
    ])
    def test_malformed_documents_rejected(self, doc):
        with pytest.raises(ScoringError):
            parse_payload(doc)


# ---------------------------------------------------------------------------
# engine behaviour


class TestEngineBuffer:
    def test_window_bounds_exclusive_inclusive(self):
        eng = StreamEngine(toy_task(period_s=20, every_s=20))
        for t in (10, 20, 30):
            eng.ingest_point("water", point(t, a=float(t)))
        batch = eng.window_batch(30 * 10**9)
        assert [p.ts_ns for p in batch.points] == [20 * 10**9, 30 * 10**9]

    def test_out_of_order_ingest_sorts(self):
        eng = StreamEngine(toy_task())
        for t in (30, 10, 20):
            eng.ingest_point("water", point(t, a=1.0))
        batch = eng.window_batch(10**12)
        assert [p.ts_ns for p in batch.points] == [10 * 10**9, 20 * 10**9, 30 * 10**9]

    def test_duplicate_timestamp_last_write_wins(self):
        eng = StreamEngine(toy_task())
        eng.ingest_point("water", point(10, a=1.0))
        ack = eng.ingest_point("water", point(10, a=99.0))
        assert ack.buffered == 1
        assert ack.overwrites == 1
        assert eng.overwrites == 1
        batch = eng.window_batch(10**12)
        assert batch.points[0].fields["a"] == 99.0

    def test_strict_mode_rejects_missing_channels(self):
        eng = StreamEngine(toy_task(), schema=("a", "b"), strict=True)
        with pytest.raises(SchemaError, match="missing channel"):
            eng.ingest_point("water", point(10, a=1.0))
        # other measurements bypass the schema
        eng.ingest_point("room", point(10, a=1.0))
        assert eng.buffered("room") == 1

    def test_strict_mode_needs_schema(self):
        with pytest.raises(ValueError):
            StreamEngine(toy_task(), strict=True)

    def test_emit_gate(self):
        eng = StreamEngine(toy_task(period_s=60, every_s=60))
        eng.ingest_point("water", point(10, a=1.0))
        assert eng.emit(10 * 10**9) is not None  # first emission is free
        assert eng.emit(30 * 10**9) is None      # 20s < every
        assert eng.emit(70 * 10**9) is not None
        assert len(eng.emitted) == 2


class TestVirtualClock:
    def test_boundaries_follow_first_timestamp(self):
        task = toy_task(period_s=300, every_s=120)
        eng = StreamEngine(task)
        times = list(range(0, 601, 60))
        for t in times:
            eng.feed("water", point(t, a=float(t)))
        eng.flush()
        ends = [b.window_end_ns for b in eng.emitted]
        assert ends == [(120 + 120 * k) * 10**9 for k in range(len(ends))]
        assert ends[-1] == 600 * 10**9

    def test_batches_match_brute_force_windows(self):
        task = toy_task(period_s=300, every_s=120)
        eng = StreamEngine(task)
        pts = [point(t, a=float(t)) for t in range(0, 1201, 60)]
        for p in pts:
            eng.feed("water", p)
        eng.flush()
        period = task.period_ns
        for batch in eng.emitted:
            want = [
                p for p in pts
                if batch.window_end_ns - period < p.ts_ns <= batch.window_end_ns
            ]
            assert list(batch.points) == want

    def test_flush_without_data_is_noop(self):
        eng = StreamEngine(toy_task())
        eng.flush()
        assert eng.emitted == []

    def test_drain_emits_final_partial_window(self):
        # points continue past the last grid boundary; a full drain must
        # window them so replay scoring covers every row
        task = toy_task(period_s=300, every_s=120)
        eng = StreamEngine(task)
        times = list(range(0, 541, 60))  # last boundary at 480, tail at 540
        for t in times:
            eng.feed("water", point(t, a=float(t)))
        eng.flush()
        ends = [b.window_end_ns for b in eng.emitted]
        assert ends == [t * 10**9 for t in (120, 240, 360, 480, 600)]
        tail = eng.emitted[-1]
        assert tail.points[-1].ts_ns == 540 * 10**9
        # draining twice adds nothing
        eng.flush()
        assert len(eng.emitted) == 5

    def test_bounded_flush_keeps_grid_only(self):
        task = toy_task(period_s=300, every_s=120)
        eng = StreamEngine(task)
        for t in range(0, 541, 60):
            eng.feed("water", point(t, a=float(t)))
        eng.flush(up_to_ns=480 * 10**9)
        assert [b.window_end_ns for b in eng.emitted] == [
            t * 10**9 for t in (120, 240, 360, 480)
        ]

    def test_on_batch_callback_sees_every_emission(self):
        seen = []
        eng = StreamEngine(toy_task(period_s=120, every_s=120), on_batch=seen.append)
        for t in range(0, 481, 60):
            eng.feed("water", point(t, a=1.0))
        eng.flush()
        assert seen == eng.emitted


class TestScoreStream:
    @staticmethod
    def jump_model():
        """Flags any difference row with a big first channel move."""
        rng = default_rng(SeedSequence([91, 1]))
        diffs = rng.normal(scale=0.1, size=(80, 2))
        y = np.zeros(80, dtype=bool)
        diffs[::8] += 10.0
        y[::8] = True
        spec = CostModelSpec(learner="forest", n_trees=5, seed=1)
        return train(spec, diffs, y, feature_names=("a", "b"))

    def test_differences_and_flags_jumps(self):
        model = self.jump_model()
        pts = [point(0, a=0.0, b=0.0), point(60, a=0.1, b=0.0),
               point(120, a=10.0, b=10.0), point(180, a=10.1, b=10.0)]
        alerts = score_stream(model, WindowBatch(180 * 10**9, tuple(pts)))
        assert [a.ts_ns for a in alerts] == [120 * 10**9]
        assert alerts[0].fields == {"a": 10.0, "b": 10.0}
        assert alerts[0].model == model_id(model)

    def test_prev_point_scores_first_row(self):
        model = self.jump_model()
        prev = point(0, a=0.0, b=0.0)
        batch = WindowBatch(60 * 10**9, (point(60, a=10.0, b=10.0),))
        assert score_stream(model, batch) == []  # single point, nothing to diff
        alerts = score_stream(model, batch, prev_point=prev)
        assert [a.ts_ns for a in alerts] == [60 * 10**9]

    def test_missing_channel_raises(self):
        model = self.jump_model()
        batch = WindowBatch(60 * 10**9, (point(0, a=1.0, b=1.0), point(60, a=1.0)))
        with pytest.raises(ScoringError, match="'b'"):
            score_stream(model, batch)

    def test_runner_scores_each_timestamp_once(self):
        model = self.jump_model()
        runner = ScoreRunner(model)
        pts = tuple(point(t, a=float(t % 7), b=0.0) for t in range(0, 301, 60))
        first = runner(WindowBatch(300 * 10**9, pts))
        again = runner(WindowBatch(360 * 10**9, pts))  # same points re-batched
        assert again == []
        assert runner.alerts == first


class TestReplayEquivalence:
    @staticmethod
    def frame_and_model(n=360, seed=7):
        rng = default_rng(SeedSequence([92, seed]))
        values = np.cumsum(rng.normal(scale=0.2, size=(n, 2)), axis=0)
        jumps = rng.integers(1, n, size=12)
        values[np.unique(jumps)] += 6.0
        frame = make_frame(values, channel_names=("a", "b"))
        diffs = np.diff(values, axis=0)
        y = np.abs(diffs).max(axis=1) > 3.0
        spec = CostModelSpec(learner="forest", n_trees=10, seed=5)
        model = train(spec, diffs, y, feature_names=("a", "b"))
        return frame, model, diffs

    def test_replay_alerts_equal_offline_predictions(self):
        frame, model, diffs = self.frame_and_model()
        task = toy_task(period_s=1800, every_s=600)
        result = replay_frame(task, frame, model=model)
        flags = model.predict(diffs)
        ts_ns = frame.timestamps.astype("datetime64[ns]").astype(np.int64)
        want = [int(t) for t in ts_ns[1:][flags]]
        got = [a.ts_ns for a in result.alerts]
        assert got == want
        assert len(got) == int(flags.sum())
        assert result.overwrites == 0

    def test_tumbling_window_gives_same_alerts(self):
        frame, model, diffs = self.frame_and_model(seed=8)
        sliding = replay_frame(toy_task(period_s=1800, every_s=600), frame, model=model)
        tumbling = replay_frame(toy_task(period_s=600, every_s=600), frame, model=model)
        assert [a.ts_ns for a in sliding.alerts] == [a.ts_ns for a in tumbling.alerts]

    def test_replay_without_model_has_no_alerts(self):
        frame, _, _ = self.frame_and_model(seed=9)
        result = replay_frame(toy_task(), frame)
        assert result.alerts == ()
        assert len(result.batches) > 0

    def test_points_from_frame_rejects_gaps(self):
        values = np.ones((5, 2))
        values[2, 1] = np.nan
        frame = make_frame(values, channel_names=("a", "b"))
        with pytest.raises(ValueError, match="missing"):
            list(points_from_frame(frame))

    def test_alert_documents(self):
        frame, model, _ = self.frame_and_model(seed=10)
        task = toy_task(period_s=1800, every_s=600)
        alerts = replay_frame(task, frame, model=model).alerts
        assert len(alerts) > 0
        doc = alerts[0].to_doc()
        assert set(doc) == {"time", "predicted", "model", "fields"}
        assert doc["predicted"] is True
        assert doc["model"] == model_id(model)
        assert parse_rfc3339(doc["time"]) == alerts[0].ts_ns

        blob = alerts_json(alerts, run_digest="d" * 12)
        parsed = json.loads(blob)
        assert parsed["run_digest"] == "d" * 12
        assert len(parsed["alerts"]) == len(alerts)
        assert alerts_doc(alerts).keys() == {"alerts"}


# ---------------------------------------------------------------------------
# HTTP facade


def http(method, url, body=None):
    req = urllib.request.Request(url, data=body, method=method)
    try:
        with urllib.request.urlopen(req, timeout=10) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as err:
        return err.code, err.read()


class TestHttpServer:
    def test_write_batch_and_alerts_routes(self):
        model = TestScoreStream.jump_model()
        task = StreamTaskSpec(
            measurement="water", period_ns=120 * 10**9,
            every_ns=120 * 10**9, out_name="batch",
        )
        with StreamHttpServer(task, schema=("a", "b"), model=model) as srv:
            base = srv.address

            status, body = http("GET", base + "/batch")
            assert status == 404
            assert json.loads(body)["series"][0]["values"] == []

            lines = []
            values = [0.0, 0.0, 0.0, 10.0, 10.0, 10.0]
            for i, v in enumerate(values):
                lines.append(f"water a={v},b={v} {i * 60 * 10**9}")
            status, body = http(
                "POST", base + "/write?db=water", "\n".join(lines).encode()
            )
            assert status == 204 and body == b""

            status, body = http("GET", base + "/batch")
            assert status == 200
            series = json.loads(body)["series"][0]
            assert series["columns"] == ["time", "a", "b"]
            assert len(series["values"]) > 0

            status, body = http("GET", base + "/alerts")
            assert status == 200
            alerts = json.loads(body)["alerts"]
            assert [a["time"] for a in alerts] == [rfc3339_ns(180 * 10**9)]
            assert alerts[0]["model"] == model_id(model)

            status, body = http("POST", base + "/write", b"water bogus 123")
            assert status == 400
            assert "error" in json.loads(body)

            assert http("GET", base + "/nowhere")[0] == 404
            assert http("POST", base + "/nowhere", b"")[0] == 404

    def test_strict_server_rejects_partial_points(self):
        task = toy_task(period_s=60, every_s=60)
        with StreamHttpServer(task, schema=("a", "b"), strict=True) as srv:
            status, body = http(
                "POST", srv.address + "/write", b"water a=1.0 1000000000"
            )
            assert status == 400
            assert "missing channel" in json.loads(body)["error"]
