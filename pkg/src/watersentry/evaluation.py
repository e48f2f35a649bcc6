"""Confusion tallies, exact-arithmetic metrics, and repeated stratified CV.

Metric ratios are computed in exact rational arithmetic and converted to
float once at the end, so they agree bit for bit with a brute-force tally
of the same predictions.  A ratio whose denominator is zero is reported
as ``None`` (undefined), never silently coerced to 0.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .errors import ShapeError, StratificationError
from .models import ClassWeights, CostModelSpec, train
from .resampling import ResampleResult, ResampleSpec, resample, with_seed

_MASK64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class ConfusionCounts:
    """Counts of prediction/label agreement for boolean classification."""

    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 0:
                raise ValueError(f"{name} must be a non-negative integer")
            object.__setattr__(self, name, int(v))

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class MetricReport:
    """Classification ratios; ``None`` marks an undefined (0/0) value."""

    sensitivity: float | None
    specificity: float | None
    precision: float | None
    f1: float | None
    f05: float | None


def confusion(predicted, actual) -> ConfusionCounts:
    """Tally a prediction vector against the true labels."""
    p = np.asarray(predicted, dtype=bool).ravel()
    a = np.asarray(actual, dtype=bool).ravel()
    if p.shape != a.shape:
        raise ShapeError("predicted and actual lengths differ")
    return ConfusionCounts(
        tp=int(np.count_nonzero(p & a)),
        fp=int(np.count_nonzero(p & ~a)),
        tn=int(np.count_nonzero(~p & ~a)),
        fn=int(np.count_nonzero(~p & a)),
    )


def _ratio(num: int, den: int) -> float | None:
    if den == 0:
        return None
    return float(Fraction(num, den))


def fbeta(counts: ConfusionCounts, beta: float) -> float | None:
    """F-measure weighting recall beta times as much as precision.

    Exact rational arithmetic throughout; ``None`` when precision or
    recall is undefined or both are zero.
    """
    if not (isinstance(beta, (int, float)) and math.isfinite(beta) and beta > 0):
        raise ValueError("beta must be a positive finite number")
    if counts.tp + counts.fp == 0 or counts.tp + counts.fn == 0:
        return None
    prec = Fraction(counts.tp, counts.tp + counts.fp)
    rec = Fraction(counts.tp, counts.tp + counts.fn)
    if prec == 0 and rec == 0:
        return None
    b2 = Fraction(str(float(beta))) ** 2
    return float((1 + b2) * prec * rec / (b2 * prec + rec))


def metrics(counts: ConfusionCounts) -> MetricReport:
    """Sensitivity, specificity, precision, F1, and F0.5 from a tally."""
    return MetricReport(
        sensitivity=_ratio(counts.tp, counts.tp + counts.fn),
        specificity=_ratio(counts.tn, counts.fp + counts.tn),
        precision=_ratio(counts.tp, counts.tp + counts.fp),
        f1=fbeta(counts, 1.0),
        f05=fbeta(counts, 0.5),
    )


def repeated_stratified_kfold(labels, k: int, repeats: int, seed: int) -> np.ndarray:
    """Fold assignments, shape ``(repeats, n)``, entries in ``0..k-1``.

    Within every repeat each fold receives each class's count to within
    one row of every other fold (and fold sizes likewise differ by at
    most one).  Repeats reshuffle independently from seeded streams.
    """
    y = np.asarray(labels, dtype=bool).ravel()
    n = y.shape[0]
    if k < 2:
        raise ValueError("k must be at least 2")
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    counts = (int(np.count_nonzero(~y)), int(np.count_nonzero(y)))
    for c, cnt in enumerate(counts):
        if cnt < k:
            raise StratificationError(
                f"class {bool(c)} has {cnt} rows, fewer than k={k} folds"
            )
    y_enc = y.astype(np.int64)
    y_order = np.sort(y_enc)
    alloc = np.stack(
        [np.bincount(y_order[i::k], minlength=2) for i in range(k)]
    )
    out = np.empty((repeats, n), dtype=np.int64)
    for r in range(repeats):
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([seed & _MASK64, r]))
        )
        fold_ids = np.empty(n, dtype=np.int64)
        for c in (0, 1):
            folds_for_class = np.repeat(np.arange(k), alloc[:, c])
            rng.shuffle(folds_for_class)
            fold_ids[y_enc == c] = folds_for_class
        out[r] = fold_ids
    return out


def stratified_subsample(labels, size: int, seed: int) -> np.ndarray:
    """Sorted row indices of a class-proportional subsample.

    Per-class quotas use largest-remainder rounding so the quotas sum to
    ``size`` exactly; rows are drawn without replacement from seeded
    streams.
    """
    y = np.asarray(labels, dtype=bool).ravel()
    n = y.shape[0]
    if not (0 < size <= n):
        raise ValueError(f"size must lie in 1..{n}")
    members = [np.flatnonzero(~y), np.flatnonzero(y)]
    exact = [Fraction(size) * len(m) / n for m in members]
    quota = [math.floor(e) for e in exact]
    short = size - sum(quota)
    remainders = sorted(
        range(2), key=lambda c: (exact[c] - quota[c], len(members[c])), reverse=True
    )
    for c in remainders[:short]:
        quota[c] += 1
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed & _MASK64])))
    picks = []
    for c in (0, 1):
        if quota[c] > len(members[c]):
            raise StratificationError(
                f"class {bool(c)} has too few rows for its quota"
            )
        picks.append(rng.choice(members[c], size=quota[c], replace=False))
    return np.sort(np.concatenate(picks))


@dataclass(frozen=True)
class CvRecord:
    """One fold's outcome."""

    repeat: int
    fold: int
    counts: ConfusionCounts
    report: MetricReport


@dataclass(frozen=True)
class MetricSummary:
    mean: float | None
    std: float | None
    n_defined: int
    n_undefined: int


@dataclass(frozen=True, eq=False)
class CvReport:
    """All fold outcomes of one cross-validation run, in (repeat, fold)
    order, plus the configuration that produced them."""

    records: tuple[CvRecord, ...]
    k: int
    repeats: int
    seed: int
    model_spec: CostModelSpec = field(repr=False)
    resample_spec: ResampleSpec | None = field(repr=False, default=None)
    keep_weights: bool = False

    def metric_values(self, name: str) -> list[float | None]:
        return [getattr(rec.report, name) for rec in self.records]

    def summary(self) -> dict[str, MetricSummary]:
        out = {}
        for name in ("sensitivity", "specificity", "precision", "f1", "f05"):
            vals = [v for v in self.metric_values(name) if v is not None]
            n_undef = len(self.records) - len(vals)
            if not vals:
                out[name] = MetricSummary(None, None, 0, n_undef)
                continue
            mean = float(np.mean(vals))
            std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
            out[name] = MetricSummary(mean, std, len(vals), n_undef)
        return out


def _audit_provenance(result: ResampleResult, n_train: int) -> None:
    """Every synthetic row must trace to training-fold rows only."""
    for rec in result.records:
        bad = rec.seed_index < 0 or rec.seed_index >= n_train
        if rec.neighbor_index is not None:
            bad = bad or rec.neighbor_index < 0 or rec.neighbor_index >= n_train
        if bad:
            raise RuntimeError(
                "resampler provenance references rows outside the training fold"
            )


def _fold_seed(base: int, repeat: int, fold: int) -> int:
    ss = np.random.SeedSequence([base & _MASK64, repeat, fold])
    return int(ss.generate_state(1, np.uint64)[0])


def cross_validate(
    model_spec: CostModelSpec,
    x,
    y,
    *,
    resample_spec: ResampleSpec | None = None,
    k: int = 10,
    repeats: int = 3,
    seed: int = 0,
    keep_weights: bool = False,
    feature_names=None,
) -> CvReport:
    """Repeated stratified k-fold evaluation of one model spec.

    When a resampler is given it runs inside each training fold only
    (never on test rows), with a per-fold seed derived from its base
    seed, and the classifier then trains with neutral class weights
    unless ``keep_weights`` asks to stack both treatments.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=bool).ravel()
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ShapeError("feature matrix and labels disagree on shape")
    assignment = repeated_stratified_kfold(y, k, repeats, seed)
    records = []
    for r in range(repeats):
        fold_ids = assignment[r]
        for f in range(k):
            test_idx = np.flatnonzero(fold_ids == f)
            train_idx = np.flatnonzero(fold_ids != f)
            x_tr, y_tr = x[train_idx], y[train_idx]
            spec = model_spec
            if resample_spec is not None:
                rr = resample(
                    x_tr, y_tr, with_seed(resample_spec, _fold_seed(resample_spec.seed, r, f))
                )
                _audit_provenance(rr, train_idx.shape[0])
                x_tr, y_tr = rr.x, rr.y
                if not keep_weights:
                    spec = replace(model_spec, weights=ClassWeights(1.0, 1.0))
            model = train(spec, x_tr, y_tr, feature_names)
            counts = confusion(model.predict(x[test_idx]), y[test_idx])
            records.append(CvRecord(r, f, counts, metrics(counts)))
    return CvReport(
        records=tuple(records),
        k=k,
        repeats=repeats,
        seed=seed,
        model_spec=model_spec,
        resample_spec=resample_spec,
        keep_weights=keep_weights,
    )


_METRIC_COLUMNS = ("sensitivity", "specificity", "precision", "f1", "f05")


def _cell(v: float | None) -> str:
    return "NA" if v is None else repr(v)


def report_to_csv(report: CvReport, run_digest: str | None = None) -> str:
    """Per-fold results as CSV text; undefined metrics stay ``NA``."""
    lines = []
    if run_digest is not None:
        lines.append(f"# run_digest={run_digest}")
    lines.append("repeat,fold,tp,fp,tn,fn," + ",".join(_METRIC_COLUMNS))
    for rec in report.records:
        c = rec.counts
        vals = ",".join(_cell(getattr(rec.report, m)) for m in _METRIC_COLUMNS)
        lines.append(f"{rec.repeat},{rec.fold},{c.tp},{c.fp},{c.tn},{c.fn},{vals}")
    return "\n".join(lines) + "\n"


def summary_to_json_doc(report: CvReport) -> dict:
    """Aggregate means and spreads in a JSON-friendly layout."""
    doc = {}
    for name, s in report.summary().items():
        doc[name] = {
            "mean": s.mean,
            "std": s.std,
            "n_defined": s.n_defined,
            "n_undefined": s.n_undefined,
        }
    return doc
