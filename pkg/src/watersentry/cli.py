"""Command-line front end.

Subcommands cover the full workflow: ``clean`` repairs a raw export,
``adf`` and ``mi`` report stationarity and relevance, ``rfe`` ranks
features, ``train``/``evaluate``/``resample-eval``/``score`` handle
models, and ``serve``/``replay`` drive the stream engine.

Exit codes: 0 success, 2 usage or configuration problem, 3 unreadable or
malformed input, 4 numerical or degenerate-data failure.  Artifacts other
than cleaned CSV (whose column layout is pinned) embed the run digest.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import evaluation, features, models, resampling, stationarity
from .config import RunConfig, load_config_file, resolve_params
from .errors import (
    CsvParseError,
    DegenerateInputError,
    DegenerateLabelsError,
    InsufficientMinorityError,
    LineProtocolError,
    ModelFormatError,
    NumericalError,
    OrderingError,
    SchemaError,
    ScoringError,
    ShapeError,
    SizeError,
    StratificationError,
    TaskSyntaxError,
    TaskValidationError,
    UnfixableChannelError,
)
from .frame import fill_missing, parse_csv, serialize_csv
from .models.spec import ClassWeights
from .stream import AnomalyAlert, StreamHttpServer, alerts_json, parse_task, replay_frame

_INPUT_ERRORS = (
    FileNotFoundError,
    IsADirectoryError,
    PermissionError,
    CsvParseError,
    SchemaError,
    OrderingError,
    UnfixableChannelError,
    SizeError,
    LineProtocolError,
    TaskSyntaxError,
    TaskValidationError,
    ModelFormatError,
    json.JSONDecodeError,
)

_NUMERICAL_ERRORS = (
    NumericalError,
    DegenerateInputError,
    DegenerateLabelsError,
    InsufficientMinorityError,
    StratificationError,
    ShapeError,
    ScoringError,
)

_MODEL_DEFAULTS = {
    "learner": "forest",
    "trees": 1000,
    "iterations": 1000,
    "lam": 1e-4,
    "weights": "balanced",
    "seed": 0,
}

_DEFAULTS: dict[str, dict] = {
    "clean": {"input": None, "output": None},
    "adf": {"input": None, "output": None, "max_lag": -1, "differenced": False},
    "mi": {"input": None, "output": None},
    "rfe": {
        "input": None, "output": None, "target_k": "scan",
        "cv_k": 10, "cv_repeats": 3, **_MODEL_DEFAULTS,
    },
    "train": {
        "input": None, "model_out": None, "subsample": 0, "holdout": 0.0,
        **_MODEL_DEFAULTS,
    },
    "evaluate": {
        "input": None, "output": None, "summary_out": "",
        "k": 10, "repeats": 3, "subsample": 0, **_MODEL_DEFAULTS,
    },
    "resample-eval": {
        "input": None, "output": None, "summary_out": "",
        "k": 10, "repeats": 3, "subsample": 0,
        "method": "ros", "target_ratio": 1.0, "k_neighbors": 5,
        "m_neighbors": 10, "keep_weights": False, **_MODEL_DEFAULTS,
    },
    "serve": {
        "task": None, "model": "", "host": "127.0.0.1", "port": 0,
        "strict": False,
    },
    "replay": {
        "task": None, "input": None, "model": "", "alerts_out": "",
        "strict": False,
    },
    "score": {"model": None, "input": None, "output": None},
}

_REQUIRED: dict[str, tuple[str, ...]] = {
    "clean": ("input", "output"),
    "adf": ("input", "output"),
    "mi": ("input", "output"),
    "rfe": ("input", "output"),
    "train": ("input", "model_out"),
    "evaluate": ("input", "output"),
    "resample-eval": ("input", "output"),
    "serve": ("task",),
    "replay": ("task", "input"),
    "score": ("model", "input", "output"),
}


def _add_flags(sub: argparse.ArgumentParser, keys: dict) -> None:
    sub.add_argument("--config", default=None, help="JSON file of flat defaults")
    for key, default in keys.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(default, bool):
            sub.add_argument(flag, action="store_const", const=True, default=None)
        elif isinstance(default, int) and not isinstance(default, bool):
            sub.add_argument(flag, type=int, default=None)
        elif isinstance(default, float):
            sub.add_argument(flag, type=float, default=None)
        else:
            sub.add_argument(flag, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="watersentry",
        description="Water-quality anomaly detection toolkit",
    )
    subs = parser.add_subparsers(dest="subcommand", required=True)
    help_lines = {
        "clean": "repair gaps in a raw sensor CSV",
        "adf": "per-channel unit-root stationarity report",
        "mi": "mutual-information relevance scores",
        "rfe": "recursive feature elimination ranking",
        "train": "fit a classifier and save it",
        "evaluate": "repeated stratified cross-validation",
        "resample-eval": "cross-validation with in-fold oversampling",
        "serve": "HTTP ingest/window/score server",
        "replay": "push a CSV through the stream engine",
        "score": "offline predictions from a saved model",
    }
    for name, defaults in _DEFAULTS.items():
        sub = subs.add_parser(name, help=help_lines[name])
        _add_flags(sub, defaults)
    return parser


def _resolve(args: argparse.Namespace) -> RunConfig:
    sub = args.subcommand
    defaults = _DEFAULTS[sub]
    cli_values = {k: getattr(args, k) for k in defaults}
    file_values = load_config_file(args.config) if args.config else {}
    config = resolve_params(sub, cli_values, file_values, defaults)
    missing = [k for k in _REQUIRED[sub] if not config.params.get(k)]
    if missing:
        flags = ", ".join("--" + k.replace("_", "-") for k in missing)
        raise ValueError(f"missing required flag(s): {flags}")
    return config


def _parse_weights(text: str) -> ClassWeights | str:
    if text == "balanced":
        return "balanced"
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(
            f"weights must be 'balanced' or 'W_NEG,W_POS', got {text!r}"
        )
    return ClassWeights(w_neg=float(parts[0]), w_pos=float(parts[1]))


def _model_spec(p: dict) -> models.CostModelSpec:
    return models.CostModelSpec(
        learner=p["learner"],
        weights=_parse_weights(p["weights"]),
        n_trees=int(p["trees"]),
        iterations=int(p["iterations"]),
        lam=float(p["lam"]),
        seed=int(p["seed"]),
    )


def _load_features(path, subsample: int = 0, seed: int = 0):
    """Shared front of every modelling command: parse, repair, difference."""
    frame = fill_missing(parse_csv(path))
    dframe = stationarity.difference(frame)
    x, y = dframe.to_matrix()
    names = dframe.channel_names
    if subsample:
        idx = evaluation.stratified_subsample(y, int(subsample), seed)
        x, y = x[idx], y[idx]
    return dframe, x, y, names


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _write_json(path, doc: dict) -> None:
    _write_text(path, json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _summary_doc(report: evaluation.CvReport, digest: str) -> dict:
    return {"run_digest": digest, "metrics": evaluation.summary_to_json_doc(report)}


# -- subcommand bodies ----------------------------------------------------


def _cmd_clean(p: dict, digest: str) -> int:
    frame = fill_missing(parse_csv(p["input"]))
    serialize_csv(frame, p["output"])
    return 0


def _cmd_adf(p: dict, digest: str) -> int:
    frame = fill_missing(parse_csv(p["input"]))
    target = stationarity.difference(frame) if p["differenced"] else frame
    max_lag = None if int(p["max_lag"]) < 0 else int(p["max_lag"])
    results = stationarity.adf_report(target, max_lag=max_lag)
    _write_text(p["output"], stationarity.adf_table_csv(results, run_digest=digest))
    return 0


def _cmd_mi(p: dict, digest: str) -> int:
    dframe, _, _, _ = _load_features(p["input"])
    scores = features.mutual_information_scores(dframe)
    lines = [f"# run_digest={digest}", "channel,score"]
    lines += [f"{s.channel},{s.score!r}" for s in scores]
    _write_text(p["output"], "\n".join(lines) + "\n")
    return 0


def _cmd_rfe(p: dict, digest: str) -> int:
    _, x, y, names = _load_features(p["input"], seed=int(p["seed"]))
    target = p["target_k"]
    if target != "scan":
        target = int(target)
    ranking = features.rfe(
        _model_spec(p), x, y, target,
        channel_names=names,
        cv_k=int(p["cv_k"]), cv_repeats=int(p["cv_repeats"]),
    )
    doc = {
        "run_digest": digest,
        "ranking": ranking.ranking,
        "selected": list(ranking.selected),
        "eliminated": list(ranking.eliminated),
        "per_k_scores": {
            str(k): [None if math.isnan(v) else v for v in vals]
            for k, vals in ranking.per_k_scores.items()
        },
    }
    _write_json(p["output"], doc)
    return 0


def _cmd_train(p: dict, digest: str) -> int:
    _, x, y, names = _load_features(p["input"], seed=int(p["seed"]))
    holdout = float(p["holdout"])
    if holdout > 0.0:
        if not holdout < 1.0:
            raise ValueError("holdout must lie in [0, 1)")
        n_train = math.ceil((1 - Fraction(str(holdout))) * x.shape[0])
        x_tr, y_tr = x[:n_train], y[:n_train]
        x_ho, y_ho = x[n_train:], y[n_train:]
    else:
        x_tr, y_tr = x, y
        x_ho = None
    if p["subsample"]:
        idx = evaluation.stratified_subsample(y_tr, int(p["subsample"]), int(p["seed"]))
        x_tr, y_tr = x_tr[idx], y_tr[idx]
    model = models.train(_model_spec(p), x_tr, y_tr, names)
    doc = models.model_to_doc(model)
    doc["run_digest"] = digest
    _write_text(
        p["model_out"],
        json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n",
    )
    out = {"model_id": models.model_id(model), "run_digest": digest}
    if x_ho is not None and x_ho.shape[0]:
        counts = evaluation.confusion(model.predict(x_ho), y_ho)
        rep = evaluation.metrics(counts)
        out["holdout"] = {
            "tp": counts.tp, "fp": counts.fp, "tn": counts.tn, "fn": counts.fn,
            "sensitivity": rep.sensitivity, "specificity": rep.specificity,
            "precision": rep.precision, "f1": rep.f1, "f05": rep.f05,
        }
    print(json.dumps(out, sort_keys=True))
    return 0


def _evaluate_common(p: dict, digest: str, resample_spec) -> int:
    _, x, y, names = _load_features(
        p["input"], subsample=int(p["subsample"]), seed=int(p["seed"])
    )
    report = evaluation.cross_validate(
        _model_spec(p), x, y,
        resample_spec=resample_spec,
        k=int(p["k"]), repeats=int(p["repeats"]),
        seed=int(p["seed"]),
        keep_weights=bool(p.get("keep_weights")),
        feature_names=names,
    )
    _write_text(p["output"], evaluation.report_to_csv(report, run_digest=digest))
    if p["summary_out"]:
        _write_json(p["summary_out"], _summary_doc(report, digest))
    print(json.dumps(_summary_doc(report, digest), sort_keys=True))
    return 0


def _cmd_evaluate(p: dict, digest: str) -> int:
    return _evaluate_common(p, digest, None)


def _cmd_resample_eval(p: dict, digest: str) -> int:
    spec = resampling.ResampleSpec(
        method=p["method"],
        k_neighbors=int(p["k_neighbors"]),
        m_neighbors=int(p["m_neighbors"]),
        target_ratio=float(p["target_ratio"]),
        seed=int(p["seed"]),
    )
    return _evaluate_common(p, digest, spec)


def _read_task(path):
    with open(path, encoding="utf-8") as fh:
        return parse_task(fh.read())


def _cmd_serve(p: dict, digest: str) -> int:
    task = _read_task(p["task"])
    model = models.load_model(p["model"]) if p["model"] else None
    schema = model.feature_names if model is not None else None
    from .frame import CHANNELS

    server = StreamHttpServer(
        task,
        schema=schema or CHANNELS,
        model=model,
        strict=bool(p["strict"]),
        host=p["host"],
        port=int(p["port"]),
    )
    server.start()
    print(json.dumps({
        "address": server.address,
        "write": "/write",
        "batch": task.out_path,
        "alerts": "/alerts",
        "run_digest": digest,
    }))
    try:
        while True:
            server.wait(1.0)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


def _cmd_replay(p: dict, digest: str) -> int:
    task = _read_task(p["task"])
    frame = fill_missing(parse_csv(p["input"]))
    model = models.load_model(p["model"]) if p["model"] else None
    result = replay_frame(task, frame, model=model, strict=bool(p["strict"]))
    if p["alerts_out"]:
        _write_text(p["alerts_out"], alerts_json(result.alerts, run_digest=digest) + "\n")
    print(json.dumps({
        "batches": len(result.batches),
        "alerts": len(result.alerts),
        "overwrites": result.overwrites,
        "run_digest": digest,
    }, sort_keys=True))
    return 0


def _cmd_score(p: dict, digest: str) -> int:
    """One JSON-lines alert per positive prediction, raw row snapshot."""
    model = models.load_model(p["model"])
    frame = fill_missing(parse_csv(p["input"]))
    dframe = stationarity.difference(frame)
    missing = [c for c in model.feature_names if c not in dframe.channel_names]
    if missing:
        raise SchemaError(f"model expects channel {missing[0]!r} not present in input")
    cols = [dframe.channel_names.index(c) for c in model.feature_names]
    flags = model.predict(dframe.values[:, cols])
    mid = models.model_id(model)
    ts_ns = dframe.timestamps.astype("datetime64[ns]").astype(np.int64)
    lines = []
    for i in np.flatnonzero(flags):
        fields = {
            c: float(frame.values[i + 1, j])
            for j, c in enumerate(frame.channel_names)
        }
        alert = AnomalyAlert(ts_ns=int(ts_ns[i]), fields=fields, model=mid)
        doc = alert.to_doc()
        doc["run_digest"] = digest
        lines.append(json.dumps(doc, sort_keys=True))
    _write_text(p["output"], "\n".join(lines) + ("\n" if lines else ""))
    print(json.dumps({
        "rows": int(dframe.n_rows),
        "positives": int(flags.sum()),
        "run_digest": digest,
    }, sort_keys=True))
    return 0


_COMMANDS = {
    "clean": _cmd_clean,
    "adf": _cmd_adf,
    "mi": _cmd_mi,
    "rfe": _cmd_rfe,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "resample-eval": _cmd_resample_eval,
    "serve": _cmd_serve,
    "replay": _cmd_replay,
    "score": _cmd_score,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = _resolve(args)
        return _COMMANDS[args.subcommand](config.params, config.digest())
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except _NUMERICAL_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 0


if __name__ == "__main__":
    sys.exit(main())
