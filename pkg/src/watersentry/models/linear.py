"""Cost-weighted linear classifiers: logistic regression and a linear SVM.

Both learners standardize features internally (zero mean, unit variance;
constant columns pass through unscaled) and penalise only the slope
vector, never the intercept.  Coefficients therefore live in z-score
space, which also makes their magnitudes comparable across features.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ..errors import DegenerateLabelsError, ShapeError
from .spec import ClassWeights, CostModelSpec


def _validate_training_input(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError("feature matrix must be two-dimensional")
    y = np.asarray(y, dtype=bool).ravel()
    if y.shape[0] != x.shape[0]:
        raise ShapeError("feature matrix and labels disagree on row count")
    if x.shape[0] == 0:
        raise ShapeError("cannot train on an empty matrix")
    if not np.all(np.isfinite(x)):
        raise ValueError("feature matrix contains non-finite values")
    return x, y


def _require_both_classes(y: np.ndarray) -> None:
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == y.shape[0]:
        raise DegenerateLabelsError("training labels contain a single class")


def _standardize_fit(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mu = x.mean(axis=0)
    sigma = x.std(axis=0)
    sigma = np.where(sigma > 0.0, sigma, 1.0)
    return mu, sigma


def _names(feature_names, d: int) -> tuple[str, ...]:
    if feature_names is None:
        return tuple(f"f{i}" for i in range(d))
    names = tuple(str(n) for n in feature_names)
    if len(names) != d:
        raise ShapeError("feature_names length does not match matrix width")
    return names


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Fitted linear decision rule ``predict = decision_function(x) > 0``."""

    kind: str
    coef: np.ndarray
    intercept: float
    mu: np.ndarray
    sigma: np.ndarray
    feature_names: tuple[str, ...]
    weights: ClassWeights
    converged: bool
    grad_inf_norm: float
    n_iter: int
    seed: int
    spec: CostModelSpec = field(repr=False)

    def __post_init__(self):
        for name in ("coef", "mu", "sigma"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def _check_width(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.coef.shape[0]:
            raise ShapeError(
                f"expected {self.coef.shape[0]} feature columns, "
                f"got shape {x.shape}"
            )
        return x

    def decision_function(self, x) -> np.ndarray:
        """Signed score; positive means the anomalous class."""
        x = self._check_width(x)
        z = (x - self.mu) / self.sigma
        return z @ self.coef + self.intercept

    def predict(self, x) -> np.ndarray:
        """Boolean predictions; a score of exactly zero is negative."""
        return self.decision_function(x) > 0.0

    def importances(self) -> np.ndarray:
        """Feature importance as |coefficient| in z-score space."""
        return np.abs(self.coef)


def train_logistic(spec: CostModelSpec, x, y, feature_names=None) -> LinearModel:
    """Weighted ridge-penalised logistic regression.

    Minimises the mean weighted negative log-likelihood plus
    ``lam * ||coef||^2 / 2`` with a quasi-Newton optimizer; the run stops
    at gradient infinity-norm ``grad_tol`` or after ``max_epochs``
    iterations, whichever comes first.  ``converged`` reports whether the
    recomputed gradient actually met the tolerance.
    """
    x, y = _validate_training_input(x, y)
    _require_both_classes(y)
    names = _names(feature_names, x.shape[1])
    weights = spec.resolve_weights(y)
    w = weights.per_sample(y)
    mu, sigma = _standardize_fit(x)
    z = (x - mu) / sigma
    n, d = z.shape
    sign = np.where(y, 1.0, -1.0)
    lam = spec.lam

    def objective(theta):
        beta = theta[:d]
        b = theta[d]
        margin = sign * (z @ beta + b)
        # log(1 + exp(-m)) via logaddexp keeps large margins finite
        loss = float(np.dot(w, np.logaddexp(0.0, -margin))) / n
        p = 0.5 * (1.0 + np.tanh(0.5 * -margin))  # sigmoid(-margin)
        g_common = w * sign * p / n
        g_beta = -(z.T @ g_common) + lam * beta
        g_b = -float(g_common.sum())
        return loss + 0.5 * lam * float(beta @ beta), np.concatenate([g_beta, [g_b]])

    result = minimize(
        objective,
        np.zeros(d + 1),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": spec.max_epochs, "gtol": spec.grad_tol, "ftol": 0.0},
    )
    theta = result.x
    _, grad = objective(theta)
    grad_inf = float(np.max(np.abs(grad))) if grad.size else 0.0
    return LinearModel(
        kind="logistic",
        coef=theta[:d],
        intercept=float(theta[d]),
        mu=mu,
        sigma=sigma,
        feature_names=names,
        weights=weights,
        converged=bool(grad_inf <= spec.grad_tol),
        grad_inf_norm=grad_inf,
        n_iter=int(result.nit),
        seed=spec.seed,
        spec=spec,
    )


def train_linear_svm(spec: CostModelSpec, x, y, feature_names=None) -> LinearModel:
    """Weighted soft-margin linear SVM via deterministic subgradient steps.

    Minimises ``lam * ||coef||^2 / 2`` plus the mean weighted hinge loss.
    Each step uses the full batch; the learning rate decays as
    ``1 / (lam * (t + t0))`` with ``t`` starting at 1.  Exactly
    ``iterations`` steps run: there is no early stopping, so the returned
    model is whatever the schedule reached.
    """
    if spec.lam <= 0:
        raise ValueError("the subgradient step schedule requires lam > 0")
    x, y = _validate_training_input(x, y)
    _require_both_classes(y)
    names = _names(feature_names, x.shape[1])
    weights = spec.resolve_weights(y)
    w = weights.per_sample(y)
    mu, sigma = _standardize_fit(x)
    z = (x - mu) / sigma
    n, d = z.shape
    sign = np.where(y, 1.0, -1.0)
    lam = spec.lam
    beta = np.zeros(d)
    b = 0.0
    ws = w * sign
    for t in range(1, spec.iterations + 1):
        margin = sign * (z @ beta + b)
        active = np.where(margin < 1.0, ws, 0.0)
        g_beta = lam * beta - (z.T @ active) / n
        g_b = -float(active.sum()) / n
        eta = 1.0 / (lam * (t + spec.t0))
        beta -= eta * g_beta
        b -= eta * g_b
    return LinearModel(
        kind="linear_svm",
        coef=beta,
        intercept=float(b),
        mu=mu,
        sigma=sigma,
        feature_names=names,
        weights=weights,
        converged=False,
        grad_inf_norm=float("nan"),
        n_iter=spec.iterations,
        seed=spec.seed,
        spec=spec,
    )
