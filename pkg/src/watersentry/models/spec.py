"""Shared model configuration: class weights, cost matrices, learner specs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateLabelsError

LEARNERS = ("logistic", "linear_svm", "forest")


@dataclass(frozen=True)
class ClassWeights:
    """Per-class loss multipliers; ``w_neg`` first, ``w_pos`` second."""

    w_neg: float
    w_pos: float

    def __post_init__(self):
        for name, w in (("w_neg", self.w_neg), ("w_pos", self.w_pos)):
            if not (isinstance(w, (int, float)) and math.isfinite(w) and w > 0):
                raise ValueError(f"{name} must be a positive finite number")

    def per_sample(self, labels: np.ndarray) -> np.ndarray:
        """Weight vector aligned with a boolean label vector."""
        return np.where(np.asarray(labels, dtype=bool), self.w_pos, self.w_neg)


@dataclass(frozen=True)
class CostMatrix:
    """Misclassification costs; the diagonal defaults to free."""

    c_fn: float
    c_fp: float
    c_tp: float = 0.0
    c_tn: float = 0.0

    def __post_init__(self):
        for name in ("c_fn", "c_fp", "c_tp", "c_tn"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be a non-negative finite number")

    def class_weights(self) -> ClassWeights:
        """Equivalent training weights: the cost ratio drives the ratio
        ``w_pos / w_neg``; diagonal costs do not affect the optimum."""
        if self.c_fp <= 0 or self.c_fn <= 0:
            raise ValueError("cost-to-weight mapping needs positive c_fn and c_fp")
        return ClassWeights(w_neg=1.0, w_pos=self.c_fn / self.c_fp)


def total_cost(counts, matrix: CostMatrix) -> float:
    """Total misclassification cost of a confusion tally."""
    return (
        matrix.c_fn * counts.fn
        + matrix.c_fp * counts.fp
        + matrix.c_tp * counts.tp
        + matrix.c_tn * counts.tn
    )


def balanced_weights(labels) -> ClassWeights:
    """Inverse-prevalence weights ``n / (2 * n_class)`` per class."""
    y = np.asarray(labels, dtype=bool).ravel()
    n = y.shape[0]
    n_pos = int(y.sum())
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabelsError(
            "balanced weights need both classes present"
        )
    return ClassWeights(w_neg=n / (2.0 * n_neg), w_pos=n / (2.0 * n_pos))


@dataclass(frozen=True)
class CostModelSpec:
    """Everything needed to train one classifier deterministically.

    ``weights`` is either the literal string ``"balanced"`` (resolved
    against the training labels at fit time) or explicit
    :class:`ClassWeights`.  Fields irrelevant to a learner are ignored by
    it but validated anyway so specs stay portable across learners.
    """

    learner: str
    weights: ClassWeights | str = "balanced"
    n_trees: int = 1000
    max_features: int | None = None
    iterations: int = 1000
    lam: float = 1e-4
    t0: float = 1.0
    max_epochs: int = 1000
    grad_tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.learner not in LEARNERS:
            raise ValueError(
                f"unknown learner {self.learner!r}; expected one of {LEARNERS}"
            )
        if isinstance(self.weights, str):
            if self.weights != "balanced":
                raise ValueError(
                    f"weights must be ClassWeights or 'balanced', got {self.weights!r}"
                )
        elif not isinstance(self.weights, ClassWeights):
            raise ValueError("weights must be ClassWeights or 'balanced'")
        if self.n_trees < 1:
            raise ValueError("n_trees must be at least 1")
        if self.max_features is not None and self.max_features < 1:
            raise ValueError("max_features must be at least 1")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ValueError("lam must be a non-negative finite number")
        if not (math.isfinite(self.t0) and self.t0 >= 0):
            raise ValueError("t0 must be a non-negative finite number")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be at least 1")
        if not (math.isfinite(self.grad_tol) and self.grad_tol > 0):
            raise ValueError("grad_tol must be positive")
        if not isinstance(self.seed, int):
            raise ValueError("seed must be an integer")

    def resolve_weights(self, labels) -> ClassWeights:
        if isinstance(self.weights, ClassWeights):
            return self.weights
        return balanced_weights(labels)
