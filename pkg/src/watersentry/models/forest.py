"""Bootstrap ensemble of weighted decision trees with majority voting.

Each tree sees ``n`` rows drawn with replacement from its own seeded
stream and considers a fresh random feature subset at every node.  Class
weights enter twice: split quality uses weighted Gini, and the ensemble
vote compares weighted tallies, so a minority class can outvote the
majority when its weight is high enough.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError
from . import _tree
from .linear import _names, _require_both_classes, _validate_training_input
from .spec import ClassWeights, CostModelSpec


@dataclass(frozen=True, eq=False)
class ForestModel:
    """Fitted tree ensemble.

    Node arrays of all trees are concatenated; ``tree_offsets`` (length
    ``n_trees + 1``) marks each tree's slice.  ``feature`` holds ``-1`` at
    leaves, whose class sits in ``leaf``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf: np.ndarray
    tree_offsets: np.ndarray
    feature_names: tuple[str, ...]
    weights: ClassWeights
    importance: np.ndarray
    seed: int
    spec: CostModelSpec = field(repr=False)
    kind: str = "forest"

    def __post_init__(self):
        for name in ("feature", "threshold", "left", "right", "leaf",
                     "tree_offsets", "importance"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_trees(self) -> int:
        return int(self.tree_offsets.shape[0] - 1)

    def predict(self, x) -> np.ndarray:
        """Weighted majority vote; a tie goes to the negative class."""
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != len(self.feature_names):
            raise ShapeError(
                f"expected {len(self.feature_names)} feature columns, "
                f"got shape {x.shape}"
            )
        votes_pos = np.empty(x.shape[0], dtype=np.int64)
        _tree.count_votes(
            x, self.feature, self.threshold, self.left, self.right,
            self.leaf, self.tree_offsets, votes_pos,
        )
        votes_neg = self.n_trees - votes_pos
        return self.weights.w_pos * votes_pos > self.weights.w_neg * votes_neg

    def importances(self) -> np.ndarray:
        """Mean per-tree normalised impurity decrease by feature."""
        return self.importance


def train_forest(spec: CostModelSpec, x, y, feature_names=None) -> ForestModel:
    """Fit the ensemble.

    ``max_features`` defaults to ``floor(sqrt(d))``.  Class weights are
    resolved once on the full training labels and shared by every tree;
    bootstrap resampling never recomputes them.  Balanced weighting
    requires both classes; explicit weights also accept degenerate
    single-class data (every tree then collapses to one leaf).
    """
    x, y = _validate_training_input(x, y)
    if spec.weights == "balanced":
        _require_both_classes(y)
    names = _names(feature_names, x.shape[1])
    weights = spec.resolve_weights(y)
    n, d = x.shape
    mtry = spec.max_features if spec.max_features is not None else max(1, int(math.isqrt(d)))
    mtry = min(mtry, d)
    y8 = y.astype(np.uint8)
    w = weights.per_sample(y)

    root = np.random.SeedSequence(spec.seed & 0xFFFFFFFFFFFFFFFF)
    children = root.spawn(spec.n_trees)
    cap = 2 * n + 2
    feat_parts = []
    thr_parts = []
    left_parts = []
    right_parts = []
    leaf_parts = []
    sizes = np.empty(spec.n_trees + 1, dtype=np.int64)
    sizes[0] = 0
    gain_total = np.zeros(d)

    feat_buf = np.empty(cap, dtype=np.int64)
    thr_buf = np.empty(cap, dtype=np.float64)
    left_buf = np.empty(cap, dtype=np.int64)
    right_buf = np.empty(cap, dtype=np.int64)
    leaf_buf = np.empty(cap, dtype=np.int8)

    for t, child in enumerate(children):
        boot_ss, feat_ss = child.spawn(2)
        gen = np.random.Generator(np.random.PCG64(boot_ss))
        boot = gen.integers(0, n, size=n, dtype=np.int64)
        seed_word = feat_ss.generate_state(1, np.uint64)[0]
        n_nodes, gain = _tree.grow_tree(
            x, y8, w, boot, np.int64(mtry), seed_word,
            feat_buf, thr_buf, left_buf, right_buf, leaf_buf,
        )
        feat_parts.append(feat_buf[:n_nodes].copy())
        thr_parts.append(thr_buf[:n_nodes].copy())
        left_parts.append(left_buf[:n_nodes].copy())
        right_parts.append(right_buf[:n_nodes].copy())
        leaf_parts.append(leaf_buf[:n_nodes].copy())
        sizes[t + 1] = n_nodes
        total = gain.sum()
        if total > 0.0:
            gain_total += gain / total

    offsets = np.cumsum(sizes)
    return ForestModel(
        feature=np.concatenate(feat_parts),
        threshold=np.concatenate(thr_parts),
        left=np.concatenate(left_parts),
        right=np.concatenate(right_parts),
        leaf=np.concatenate(leaf_parts),
        tree_offsets=offsets,
        feature_names=names,
        weights=weights,
        importance=gain_total / spec.n_trees,
        seed=spec.seed,
        spec=spec,
    )
