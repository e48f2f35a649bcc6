"""Versioned JSON persistence for fitted models.

Floats are serialized with full precision (JSON uses ``repr``-style
shortest round-trip formatting), so a saved model predicts bit for bit
like the original.  Files carry a format tag and version; anything
unrecognised is rejected rather than guessed at.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict

import numpy as np

from ..errors import ModelFormatError
from .forest import ForestModel
from .linear import LinearModel
from .spec import ClassWeights, CostModelSpec

FORMAT_TAG = "watersentry.model"
FORMAT_VERSION = 1


def _spec_doc(spec: CostModelSpec) -> dict:
    doc = asdict(spec)
    if isinstance(spec.weights, ClassWeights):
        doc["weights"] = {"w_neg": spec.weights.w_neg, "w_pos": spec.weights.w_pos}
    return doc


def _spec_from_doc(doc: dict) -> CostModelSpec:
    doc = dict(doc)
    if isinstance(doc.get("weights"), dict):
        doc["weights"] = ClassWeights(**doc["weights"])
    return CostModelSpec(**doc)


def model_to_doc(model) -> dict:
    """Plain-JSON document for a fitted model."""
    common = {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "kind": model.kind,
        "feature_names": list(model.feature_names),
        "weights": {"w_neg": model.weights.w_neg, "w_pos": model.weights.w_pos},
        "seed": model.seed,
        "spec": _spec_doc(model.spec),
    }
    if isinstance(model, LinearModel):
        grad = model.grad_inf_norm
        common.update(
            coef=[float(v) for v in model.coef],
            intercept=float(model.intercept),
            mu=[float(v) for v in model.mu],
            sigma=[float(v) for v in model.sigma],
            converged=bool(model.converged),
            grad_inf_norm=None if math.isnan(grad) else float(grad),
            n_iter=int(model.n_iter),
        )
    elif isinstance(model, ForestModel):
        common.update(
            feature=[int(v) for v in model.feature],
            threshold=[float(v) for v in model.threshold],
            left=[int(v) for v in model.left],
            right=[int(v) for v in model.right],
            leaf=[int(v) for v in model.leaf],
            tree_offsets=[int(v) for v in model.tree_offsets],
            importance=[float(v) for v in model.importance],
        )
    else:
        raise ModelFormatError(f"cannot persist model of type {type(model).__name__}")
    return common


def model_from_doc(doc: dict):
    """Rebuild a fitted model from its JSON document."""
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_TAG:
        raise ModelFormatError("not a model file (missing format tag)")
    if doc.get("version") != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model version {doc.get('version')!r}; "
            f"this build reads version {FORMAT_VERSION}"
        )
    kind = doc.get("kind")
    weights = ClassWeights(**doc["weights"])
    spec = _spec_from_doc(doc["spec"])
    names = tuple(doc["feature_names"])
    if kind in ("logistic", "linear_svm"):
        grad = doc["grad_inf_norm"]
        return LinearModel(
            kind=kind,
            coef=np.array(doc["coef"], dtype=np.float64),
            intercept=float(doc["intercept"]),
            mu=np.array(doc["mu"], dtype=np.float64),
            sigma=np.array(doc["sigma"], dtype=np.float64),
            feature_names=names,
            weights=weights,
            converged=bool(doc["converged"]),
            grad_inf_norm=float("nan") if grad is None else float(grad),
            n_iter=int(doc["n_iter"]),
            seed=int(doc["seed"]),
            spec=spec,
        )
    if kind == "forest":
        return ForestModel(
            feature=np.array(doc["feature"], dtype=np.int64),
            threshold=np.array(doc["threshold"], dtype=np.float64),
            left=np.array(doc["left"], dtype=np.int64),
            right=np.array(doc["right"], dtype=np.int64),
            leaf=np.array(doc["leaf"], dtype=np.int8),
            tree_offsets=np.array(doc["tree_offsets"], dtype=np.int64),
            feature_names=names,
            weights=weights,
            importance=np.array(doc["importance"], dtype=np.float64),
            seed=int(doc["seed"]),
            spec=spec,
        )
    raise ModelFormatError(f"unknown model kind {kind!r}")


def model_id(model) -> str:
    """Stable short identifier: hash of the canonical model document."""
    doc = model_to_doc(model)
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_doc(model), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"model file is not valid JSON: {exc}") from exc
    return model_from_doc(doc)
