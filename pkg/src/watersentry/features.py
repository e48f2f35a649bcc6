"""Feature relevance scoring and recursive feature elimination.

Mutual information is estimated on equal-frequency bins, so any strictly
monotone rescaling of a feature leaves its score untouched; scores are
plug-in estimates in nats.  Elimination ranks features by retraining the
chosen learner after dropping the weakest feature one step at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .evaluation import cross_validate
from .models import CostModelSpec, train

N_BINS = 16


@dataclass(frozen=True)
class FeatureScore:
    channel: str
    score: float


@dataclass(frozen=True)
class RfeRanking:
    """Outcome of recursive elimination.

    ``ranking`` maps every feature to a distinct rank, 1 = kept longest /
    most important.  ``selected`` is the surviving set, ``eliminated``
    lists drops in order (first dropped first).  ``per_k_scores`` is
    filled in scan mode only: fold-level F1 values (``nan`` when
    undefined) for each candidate size, keyed by size.
    """

    ranking: dict[str, int]
    selected: tuple[str, ...]
    eliminated: tuple[str, ...]
    per_k_scores: dict[int, tuple[float, ...]]


def equal_frequency_bins(values, n_bins: int = N_BINS) -> np.ndarray:
    """Bin indices 0..n_bins-1 with near-equal occupancy.

    Ranks come from a stable argsort, so ties and any strictly monotone
    transform of the values produce identical bins.
    """
    x = np.asarray(values, dtype=np.float64).ravel()
    n = x.shape[0]
    if n == 0:
        raise ShapeError("cannot bin an empty vector")
    order = np.argsort(x, kind="stable")
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(n)
    return (ranks * n_bins) // n


def _mi_nats(bins: np.ndarray, labels: np.ndarray, n_bins: int) -> float:
    n = bins.shape[0]
    joint = np.zeros((n_bins, 2), dtype=np.float64)
    np.add.at(joint, (bins, labels.astype(np.int64)), 1.0)
    joint /= n
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    total = 0.0
    for i in range(n_bins):
        for j in range(2):
            p = joint[i, j]
            if p > 0.0:
                total += p * math.log(p / (px[i] * py[j]))
    return float(total)


def mutual_information_scores(features, labels=None, channel_names=None) -> list[FeatureScore]:
    """Score each channel's dependence with the labels, best first.

    ``features`` is a differenced frame (labels and names taken from it
    unless overridden) or a plain 2-D matrix.  A constant channel scores
    exactly 0.  Ties keep channel order.
    """
    if hasattr(features, "values") and hasattr(features, "channel_names"):
        matrix = features.values
        if channel_names is None:
            channel_names = features.channel_names
        if labels is None:
            labels = features.labels
    else:
        matrix = np.asarray(features, dtype=np.float64)
    if matrix.ndim != 2:
        raise ShapeError("feature matrix must be two-dimensional")
    if labels is None:
        raise ValueError("labels are required when features is a plain matrix")
    y = np.asarray(labels, dtype=bool).ravel()
    if y.shape[0] != matrix.shape[0]:
        raise ShapeError("feature matrix and labels disagree on row count")
    if matrix.shape[0] == 0:
        raise ShapeError("cannot score an empty matrix")
    if channel_names is None:
        channel_names = tuple(f"f{i}" for i in range(matrix.shape[1]))
    if len(channel_names) != matrix.shape[1]:
        raise ShapeError("channel_names length does not match matrix width")
    scores = []
    for j, name in enumerate(channel_names):
        col = matrix[:, j]
        if col.size and np.all(col == col[0]):
            scores.append(FeatureScore(str(name), 0.0))
            continue
        bins = equal_frequency_bins(col)
        scores.append(FeatureScore(str(name), _mi_nats(bins, y, N_BINS)))
    return sorted(scores, key=lambda s: -s.score)


def rfe(
    model_spec: CostModelSpec,
    features,
    labels=None,
    target_k="scan",
    *,
    channel_names=None,
    cv_k: int = 10,
    cv_repeats: int = 3,
) -> RfeRanking:
    """Recursive feature elimination with step size one.

    Importance is the learner's own: absolute z-space coefficients for
    the linear models, mean impurity decrease for the forest; the least
    important feature drops each round.  With an integer ``target_k``
    elimination stops at that size.  With ``"scan"`` it runs to a single
    feature, recording cross-validated F1 at every size; ``selected`` is
    then the size with the best mean F1 (smaller wins ties).
    """
    if hasattr(features, "values") and hasattr(features, "channel_names"):
        if channel_names is None:
            channel_names = features.channel_names
        if labels is None:
            labels = features.labels
        features = features.values
    x = np.ascontiguousarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError("feature matrix must be two-dimensional")
    y = np.asarray(labels, dtype=bool).ravel()
    d = x.shape[1]
    if channel_names is None:
        channel_names = tuple(f"f{i}" for i in range(d))
    names = tuple(str(n) for n in channel_names)
    if len(names) != d:
        raise ShapeError("channel_names length does not match matrix width")
    scan = target_k == "scan"
    if not scan:
        if not isinstance(target_k, (int, np.integer)) or isinstance(target_k, bool):
            raise ValueError("target_k must be an integer or 'scan'")
        if not (1 <= target_k <= d):
            raise ValueError(f"target_k must lie in 1..{d}")
    stop_k = 1 if scan else int(target_k)

    current = list(range(d))
    eliminated: list[int] = []
    per_k: dict[int, tuple[float, ...]] = {}
    final_importance: np.ndarray | None = None
    while True:
        size = len(current)
        if scan:
            report = cross_validate(
                model_spec,
                x[:, current],
                y,
                k=cv_k,
                repeats=cv_repeats,
                seed=model_spec.seed,
            )
            per_k[size] = tuple(
                math.nan if v is None else v for v in report.metric_values("f1")
            )
        if size <= stop_k:
            if final_importance is None:
                model = train(model_spec, x[:, current], y,
                              [names[i] for i in current])
                final_importance = model.importances()
            break
        model = train(model_spec, x[:, current], y, [names[i] for i in current])
        imp = model.importances()
        drop_local = int(np.argmin(imp))
        eliminated.append(current[drop_local])
        current = current[:drop_local] + current[drop_local + 1 :]
        final_importance = None

    # Ranks: drops take d, d-1, ... in elimination order; survivors get
    # 1..stop_k by final-fit importance (stable on ties).
    ranking: dict[str, int] = {}
    for pos, idx in enumerate(eliminated):
        ranking[names[idx]] = d - pos
    survivor_order = sorted(
        range(len(current)), key=lambda i: (-final_importance[i], i)
    )
    for rank, local in enumerate(survivor_order, start=1):
        ranking[names[current[local]]] = rank

    if scan:
        best_k = None
        best_score = -math.inf
        for size in sorted(per_k):
            vals = [v for v in per_k[size] if not math.isnan(v)]
            score = sum(vals) / len(vals) if vals else -math.inf
            if score > best_score:
                best_score = score
                best_k = size
        selected = tuple(
            name for name, rank in sorted(ranking.items(), key=lambda kv: kv[1])
        )[:best_k]
    else:
        selected = tuple(
            sorted((names[i] for i in current), key=lambda nm: ranking[nm])
        )
    return RfeRanking(
        ranking=ranking,
        selected=selected,
        eliminated=tuple(names[i] for i in eliminated),
        per_k_scores=per_k,
    )
