"""Minority oversampling: duplication and interpolation families.

Every method keeps the original rows first and untouched, appends its new
minority rows after them, and records where each new row came from
(seed row, neighbour row, interpolation coefficient), so downstream code
can audit exactly which training rows produced which synthetics.

All randomness flows from one seeded generator per call; for a fixed
input and spec the output is byte-identical across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateLabelsError, InsufficientMinorityError, ShapeError
from .models import CostModelSpec, train_linear_svm

METHODS = ("ros", "smote", "blsmote", "svmsmote", "adasyn")


@dataclass(frozen=True)
class ResampleSpec:
    """Which method to run and with what knobs.

    ``target_ratio`` is the desired minority/majority count ratio for the
    interpolating methods and plain duplication; the adaptive method
    instead scales the class-count gap by it.
    """

    method: str
    k_neighbors: int = 5
    m_neighbors: int = 10
    target_ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be at least 1")
        if self.m_neighbors < 1:
            raise ValueError("m_neighbors must be at least 1")
        if not (0.0 < self.target_ratio <= 1.0):
            raise ValueError("target_ratio must lie in (0, 1]")
        if not isinstance(self.seed, int):
            raise ValueError("seed must be an integer")


@dataclass(frozen=True)
class SyntheticRecord:
    """Provenance of one appended row.

    ``seed_index`` and ``neighbor_index`` are row indices into the input
    matrix.  Duplications carry no neighbour and no coefficient; an
    interpolated row is ``seed + lam * (neighbor - seed)`` exactly.
    """

    seed_index: int
    neighbor_index: int | None
    lam: float | None


@dataclass(frozen=True, eq=False)
class ResampleResult:
    """Augmented data plus provenance; ``warning`` flags a no-op fallback."""

    x: np.ndarray
    y: np.ndarray
    records: tuple[SyntheticRecord, ...]
    warning: str | None = None


def interpolate(seed_row: np.ndarray, neighbor_row: np.ndarray, lam: float) -> np.ndarray:
    """Point on the segment from seed to neighbour at fraction ``lam``."""
    return seed_row + lam * (neighbor_row - seed_row)


def _validate(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError("feature matrix must be two-dimensional")
    y = np.asarray(y, dtype=bool).ravel()
    if y.shape[0] != x.shape[0]:
        raise ShapeError("feature matrix and labels disagree on row count")
    if not np.all(np.isfinite(x)):
        raise ValueError("feature matrix contains non-finite values")
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == y.shape[0]:
        raise DegenerateLabelsError("oversampling needs both classes present")
    return x, y


def _counts(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Minority and majority row indices (the positive class is assumed
    to be the smaller one; on an exact tie the positives count as
    minority and no rows are needed anyway)."""
    pos = np.flatnonzero(y)
    neg = np.flatnonzero(~y)
    if pos.shape[0] <= neg.shape[0]:
        return pos, neg
    return neg, pos


def _deficit(n_min: int, n_maj: int, ratio: float) -> int:
    return max(0, int(round(ratio * n_maj)) - n_min)


def _unchanged(x, y, warning=None) -> ResampleResult:
    return ResampleResult(x.copy(), y.copy(), (), warning)


def _knn_indices(queries: np.ndarray, pool: np.ndarray, k: int,
                 exclude_diagonal: bool = False) -> np.ndarray:
    """Indices (into ``pool``) of the k nearest pool rows per query.

    Euclidean distance; ties resolve to the lower pool index.  With
    ``exclude_diagonal`` the arrays must alias (query ``i`` IS pool row
    ``i``) and each query skips itself.
    """
    d2 = (
        np.sum(queries ** 2, axis=1)[:, None]
        - 2.0 * (queries @ pool.T)
        + np.sum(pool ** 2, axis=1)[None, :]
    )
    if exclude_diagonal:
        np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, :k]


def _append(x, y, synth_rows, minority_label: bool,
            records: list[SyntheticRecord], warning=None) -> ResampleResult:
    if synth_rows:
        extra = np.vstack(synth_rows)
        x_out = np.concatenate([x, extra])
        y_out = np.concatenate([y, np.full(len(synth_rows), minority_label)])
    else:
        x_out, y_out = x.copy(), y.copy()
    return ResampleResult(x_out, y_out, tuple(records), warning)


def random_oversample(x, y, spec: ResampleSpec) -> ResampleResult:
    """Duplicate uniformly chosen minority rows until the ratio is met."""
    x, y = _validate(x, y)
    mino, majo = _counts(y)
    need = _deficit(mino.shape[0], majo.shape[0], spec.target_ratio)
    if need == 0:
        return _unchanged(x, y)
    rng = np.random.default_rng(spec.seed)
    picks = mino[rng.integers(0, mino.shape[0], size=need)]
    records = [SyntheticRecord(int(i), None, None) for i in picks]
    label = bool(y[mino[0]])
    return _append(x, y, [x[i] for i in picks], label, records)


def smote(x, y, spec: ResampleSpec) -> ResampleResult:
    """Interpolate between minority rows and their minority neighbours."""
    x, y = _validate(x, y)
    mino, majo = _counts(y)
    n_min = mino.shape[0]
    if n_min <= spec.k_neighbors:
        raise InsufficientMinorityError(
            f"need more than k_neighbors={spec.k_neighbors} minority rows, have {n_min}"
        )
    need = _deficit(n_min, majo.shape[0], spec.target_ratio)
    if need == 0:
        return _unchanged(x, y)
    rng = np.random.default_rng(spec.seed)
    x_min = x[mino]
    nn = _knn_indices(x_min, x_min, spec.k_neighbors, exclude_diagonal=True)
    seeds = rng.integers(0, n_min, size=need)
    picks = rng.integers(0, spec.k_neighbors, size=need)
    lams = rng.random(size=need)
    rows = []
    records = []
    for s, p, lam in zip(seeds, picks, lams):
        nbr_local = int(nn[s, p])
        rows.append(interpolate(x_min[s], x_min[nbr_local], lam))
        records.append(SyntheticRecord(int(mino[s]), int(mino[nbr_local]), float(lam)))
    return _append(x, y, rows, bool(y[mino[0]]), records)


def _whole_set_neighbors(x, mino, m: int) -> list[list[int]]:
    """Up to ``m`` nearest whole-set neighbours per minority row, self
    excluded (the query row always appears in the whole-set pool)."""
    nn_all = _knn_indices(x[mino], x, m + 1, exclude_diagonal=False)
    return [[int(j) for j in nn_all[i] if j != g][:m] for i, g in enumerate(mino)]


def _danger_mask(x, y, mino, m: int) -> np.ndarray:
    """Borderline filter: with ``m`` whole-set neighbours per minority
    row holding ``m_maj`` majority members, a row is in danger iff
    ``m/2 <= m_maj < m`` (all-majority neighbourhoods are noise, safer
    ones are left alone)."""
    minority_label = bool(y[mino[0]])
    m_maj = np.empty(mino.shape[0], dtype=np.int64)
    counted = np.empty(mino.shape[0], dtype=np.int64)
    for i, neigh in enumerate(_whole_set_neighbors(x, mino, m)):
        m_maj[i] = sum(1 for j in neigh if bool(y[j]) != minority_label)
        counted[i] = len(neigh)
    return (2 * m_maj >= counted) & (m_maj < counted)


def borderline_smote(x, y, spec: ResampleSpec) -> ResampleResult:
    """Interpolate only from minority rows whose neighbourhoods are at
    least half majority (the class boundary), toward minority neighbours.

    If no row qualifies the input comes back unchanged with a warning.
    """
    x, y = _validate(x, y)
    mino, majo = _counts(y)
    n_min = mino.shape[0]
    if n_min <= spec.k_neighbors:
        raise InsufficientMinorityError(
            f"need more than k_neighbors={spec.k_neighbors} minority rows, have {n_min}"
        )
    need = _deficit(n_min, majo.shape[0], spec.target_ratio)
    if need == 0:
        return _unchanged(x, y)
    danger_local = np.flatnonzero(_danger_mask(x, y, mino, spec.m_neighbors))
    if danger_local.shape[0] == 0:
        return _unchanged(x, y, warning="no borderline minority rows; input returned unchanged")
    rng = np.random.default_rng(spec.seed)
    x_min = x[mino]
    nn = _knn_indices(x_min, x_min, spec.k_neighbors, exclude_diagonal=True)
    seeds = danger_local[rng.integers(0, danger_local.shape[0], size=need)]
    picks = rng.integers(0, spec.k_neighbors, size=need)
    lams = rng.random(size=need)
    rows = []
    records = []
    for s, p, lam in zip(seeds, picks, lams):
        nbr_local = int(nn[s, p])
        rows.append(interpolate(x_min[s], x_min[nbr_local], lam))
        records.append(SyntheticRecord(int(mino[s]), int(mino[nbr_local]), float(lam)))
    return _append(x, y, rows, bool(y[mino[0]]), records)


def svm_smote(x, y, spec: ResampleSpec) -> ResampleResult:
    """Interpolate from minority rows that a linear SVM puts on or inside
    its margin.

    Seeds in mostly-minority neighbourhoods interpolate toward minority
    neighbours; seeds in majority-heavy neighbourhoods interpolate toward
    whole-set neighbours, pushing outward along the boundary while staying
    on the segment.  No margin rows -> input unchanged with a warning.
    """
    x, y = _validate(x, y)
    mino, majo = _counts(y)
    n_min = mino.shape[0]
    if n_min <= spec.k_neighbors:
        raise InsufficientMinorityError(
            f"need more than k_neighbors={spec.k_neighbors} minority rows, have {n_min}"
        )
    need = _deficit(n_min, majo.shape[0], spec.target_ratio)
    if need == 0:
        return _unchanged(x, y)
    minority_label = bool(y[mino[0]])
    svm = train_linear_svm(
        CostModelSpec(learner="linear_svm", seed=spec.seed), x, y
    )
    score = svm.decision_function(x)
    sign = np.where(y, 1.0, -1.0)
    margins = sign * score
    support_local = np.flatnonzero(margins[mino] <= 1.0)
    if support_local.shape[0] == 0:
        return _unchanged(
            x, y, warning="no minority rows on the margin; input returned unchanged"
        )
    rng = np.random.default_rng(spec.seed)
    x_min = x[mino]
    nn_min = _knn_indices(x_min, x_min, spec.k_neighbors, exclude_diagonal=True)
    density = np.empty(n_min)
    whole_nbrs: list[list[int]] = []
    for i, neigh in enumerate(_whole_set_neighbors(x, mino, spec.m_neighbors)):
        whole_nbrs.append(neigh[: spec.k_neighbors])
        density[i] = sum(1 for j in neigh if bool(y[j]) != minority_label) / len(neigh)
    seeds = support_local[rng.integers(0, support_local.shape[0], size=need)]
    picks = rng.integers(0, spec.k_neighbors, size=need)
    lams = rng.random(size=need)
    rows = []
    records = []
    for s, p, lam in zip(seeds, picks, lams):
        if density[s] <= 0.5:
            nbr_global = int(mino[int(nn_min[s, p])])
        else:
            cand = whole_nbrs[s]
            nbr_global = int(cand[p % len(cand)])
        rows.append(interpolate(x[mino[s]], x[nbr_global], lam))
        records.append(SyntheticRecord(int(mino[s]), nbr_global, float(lam)))
    return _append(x, y, rows, minority_label, records)


def adasyn(x, y, spec: ResampleSpec) -> ResampleResult:
    """Adaptive interpolation: harder minority rows get more synthetics.

    Difficulty of minority row ``i`` is the majority share among its
    ``k`` whole-set neighbours; the class-count gap times ``target_ratio``
    is split across rows proportionally (rounded per row).  If every
    neighbourhood is pure minority the input comes back unchanged with a
    warning.
    """
    x, y = _validate(x, y)
    mino, majo = _counts(y)
    n_min = mino.shape[0]
    if n_min <= spec.k_neighbors:
        raise InsufficientMinorityError(
            f"need more than k_neighbors={spec.k_neighbors} minority rows, have {n_min}"
        )
    minority_label = bool(y[mino[0]])
    gap = majo.shape[0] - n_min
    g_total = spec.target_ratio * gap
    if round(g_total) <= 0:
        return _unchanged(x, y)
    r = np.empty(n_min)
    for i, neigh in enumerate(_whole_set_neighbors(x, mino, spec.k_neighbors)):
        r[i] = sum(1 for j in neigh if bool(y[j]) != minority_label) / len(neigh)
    r_sum = r.sum()
    if r_sum == 0.0:
        return _unchanged(
            x, y, warning="every minority neighbourhood is pure; input returned unchanged"
        )
    alloc = np.rint((r / r_sum) * g_total).astype(np.int64)
    if alloc.sum() == 0:
        return _unchanged(
            x, y, warning="per-row allocations all rounded to zero; input returned unchanged"
        )
    rng = np.random.default_rng(spec.seed)
    x_min = x[mino]
    nn_min = _knn_indices(x_min, x_min, spec.k_neighbors, exclude_diagonal=True)
    rows = []
    records = []
    for i in range(n_min):
        gi = int(alloc[i])
        if gi == 0:
            continue
        picks = rng.integers(0, spec.k_neighbors, size=gi)
        lams = rng.random(size=gi)
        for p, lam in zip(picks, lams):
            nbr_local = int(nn_min[i, p])
            rows.append(interpolate(x_min[i], x_min[nbr_local], lam))
            records.append(
                SyntheticRecord(int(mino[i]), int(mino[nbr_local]), float(lam))
            )
    return _append(x, y, rows, minority_label, records)


_DISPATCH = {
    "ros": random_oversample,
    "smote": smote,
    "blsmote": borderline_smote,
    "svmsmote": svm_smote,
    "adasyn": adasyn,
}


def resample(x, y, spec: ResampleSpec) -> ResampleResult:
    """Run whichever method the spec names."""
    return _DISPATCH[spec.method](x, y, spec)


def with_seed(spec: ResampleSpec, seed: int) -> ResampleSpec:
    """Copy of the spec with a different seed (for per-fold derivation)."""
    return replace(spec, seed=seed)
