"""Anomaly detection toolkit for drinking-water sensor time series.

The package covers the full working path from raw sensor exports to live
scoring: CSV cleaning and gap repair, stationarity checking, first-order
differencing, feature ranking, cost-sensitive classifiers, minority
oversampling, repeated cross-validation, and a windowed streaming engine
with an HTTP facade.

Most entry points accept plain numpy arrays next to the frame types, so
the pieces can be used independently of each other.
"""

from .errors import WatersentryError
from .evaluation import confusion, cross_validate, metrics, repeated_stratified_kfold
from .features import mutual_information_scores, rfe
from .frame import (
    CHANNELS,
    TimeSeriesFrame,
    chronological_split,
    fill_missing,
    parse_csv,
    serialize_csv,
)
from .models import load_model, predict, save_model, train
from .models.spec import ClassWeights, CostMatrix, CostModelSpec
from .resampling import ResampleSpec, resample
from .stationarity import Verdict, adf_report, adf_test, difference
from .synthetic import synthetic_frame

__version__ = "0.1.0"

__all__ = [
    "CHANNELS",
    "ClassWeights",
    "CostMatrix",
    "CostModelSpec",
    "ResampleSpec",
    "TimeSeriesFrame",
    "Verdict",
    "WatersentryError",
    "adf_report",
    "adf_test",
    "chronological_split",
    "confusion",
    "cross_validate",
    "difference",
    "fill_missing",
    "load_model",
    "metrics",
    "mutual_information_scores",
    "parse_csv",
    "predict",
    "repeated_stratified_kfold",
    "resample",
    "rfe",
    "save_model",
    "serialize_csv",
    "synthetic_frame",
    "train",
    "__version__",
]
