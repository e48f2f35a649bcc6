"""Cost-sensitive classifiers over differenced sensor features.

Three learners share one spec type and one prediction contract (boolean
anomaly flags, ties broken toward the negative class): ridge-penalised
logistic regression, a subgradient linear SVM, and a from-scratch random
forest.
"""

from .forest import ForestModel, train_forest
from .linear import LinearModel, train_linear_svm, train_logistic
from .persist import (
    load_model,
    model_from_doc,
    model_id,
    model_to_doc,
    save_model,
)
from .spec import (
    LEARNERS,
    ClassWeights,
    CostMatrix,
    CostModelSpec,
    balanced_weights,
    total_cost,
)

_TRAINERS = {
    "logistic": train_logistic,
    "linear_svm": train_linear_svm,
    "forest": train_forest,
}


def train(spec: CostModelSpec, x, y, feature_names=None):
    """Fit whichever learner the spec names."""
    return _TRAINERS[spec.learner](spec, x, y, feature_names)


def predict(model, x):
    """Boolean anomaly predictions from any fitted model."""
    return model.predict(x)


__all__ = [
    "LEARNERS",
    "ClassWeights",
    "CostMatrix",
    "CostModelSpec",
    "ForestModel",
    "LinearModel",
    "balanced_weights",
    "load_model",
    "model_from_doc",
    "model_id",
    "model_to_doc",
    "predict",
    "save_model",
    "total_cost",
    "train",
    "train_forest",
    "train_linear_svm",
    "train_logistic",
]
