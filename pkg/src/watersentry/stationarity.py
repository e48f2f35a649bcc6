"""First differencing and a unit-root stationarity check.

The check regresses the one-step difference on an intercept, the lagged
level, and ``p`` lagged differences, picks ``p`` by AIC over a common
trimmed sample, refits at the winner on the full usable sample, and
reports the t-ratio of the lagged-level coefficient against pinned
critical values for the constant-only specification.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import (
    DegenerateInputError,
    NumericalError,
    SchemaError,
    SizeError,
)
from .frame import TimeSeriesFrame

# Large-sample critical values for the constant-only regression at the
# 1%, 5%, and 10% levels.
CRITICAL_VALUES: tuple[float, float, float] = (-3.43042, -2.86157, -2.56679)

# The final regression needs at least this many usable rows.
_MIN_USABLE = 20


class Verdict(enum.Enum):
    """Outcome of the unit-root check, strongest rejection level first."""

    STATIONARY_1 = "stationary@1%"
    STATIONARY_5 = "stationary@5%"
    STATIONARY_10 = "stationary@10%"
    NON_STATIONARY = "non-stationary"

    @property
    def is_stationary(self) -> bool:
        return self is not Verdict.NON_STATIONARY


@dataclass(frozen=True, eq=False)
class DifferencedFrame:
    """Gap-free frame of one-step differences.

    Row ``t`` holds ``y_t - y_(t-1)`` and keeps row ``t``'s timestamp and
    label, so the first source row is consumed.
    """

    timestamps: np.ndarray
    channel_names: tuple[str, ...]
    values: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype="datetime64[s]")
        vals = np.asarray(self.values, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=bool)
        names = tuple(self.channel_names)
        if vals.shape != (ts.shape[0], len(names)):
            raise ValueError("values shape does not match rows x channels")
        if labels.shape != (ts.shape[0],):
            raise ValueError("labels length does not match row count")
        for arr in (ts, vals, labels):
            arr.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "channel_names", names)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "labels", labels)

    @property
    def n_rows(self) -> int:
        return int(self.timestamps.shape[0])

    def channel(self, name: str) -> np.ndarray:
        if name not in self.channel_names:
            raise SchemaError(f"unknown channel {name!r}")
        return self.values[:, self.channel_names.index(name)]

    def to_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Feature matrix and label vector for model training."""
        return self.values, self.labels

    def __eq__(self, other) -> bool:
        if not isinstance(other, DifferencedFrame):
            return NotImplemented
        return (
            self.channel_names == other.channel_names
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class AdfResult:
    """Unit-root check outcome for one series."""

    statistic: float
    lag: int
    critical_values: tuple[float, float, float]
    verdict: Verdict
    used_obs: int


def difference(frame: TimeSeriesFrame) -> DifferencedFrame:
    """One-step differences of every channel.

    The frame must be gap-free (run ``fill_missing`` first) and have at
    least two rows.
    """
    if frame.missing_mask.any():
        raise ValueError("frame has missing cells; repair gaps before differencing")
    if frame.n_rows < 2:
        raise SizeError("differencing needs at least two rows")
    return DifferencedFrame(
        frame.timestamps[1:],
        frame.channel_names,
        np.diff(frame.values, axis=0),
        frame.labels[1:],
    )


def undifference(dframe: DifferencedFrame, first_row: np.ndarray) -> np.ndarray:
    """Rebuild levels from differences given the consumed first row."""
    first = np.asarray(first_row, dtype=np.float64).reshape(1, -1)
    if first.shape[1] != len(dframe.channel_names):
        raise ValueError("first_row width does not match channel count")
    return np.concatenate([first, first + np.cumsum(dframe.values, axis=0)])


def default_max_lag(n: int) -> int:
    """Schwert-style default lag ceiling, capped so the fit stays sane."""
    lag = int(math.floor(12.0 * (n / 100.0) ** 0.25))
    return max(0, min(lag, n - 1 - _MIN_USABLE, (n - 4) // 2))


def _design(x: np.ndarray, dy: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Dependent vector and regressor matrix for ``p`` lagged differences.

    Columns are ordered [intercept, lagged level, lag 1, ..., lag p] so a
    lower-lag model is exactly a column prefix of a higher-lag one.
    """
    n = x.shape[0]
    m = n - 1 - p
    y_dep = dy[p:]
    cols = [np.ones(m), x[p : n - 1]]
    for i in range(1, p + 1):
        cols.append(dy[p - i : n - 1 - i])
    return y_dep, np.column_stack(cols)


def _check_rank(r: np.ndarray, rows: int) -> None:
    diag = np.abs(np.diag(r))
    tol = np.finfo(np.float64).eps * max(rows, r.shape[1]) * (diag.max() if diag.size else 0.0)
    if diag.size == 0 or diag.min() <= tol:
        raise NumericalError(
            "singular design matrix: collinear regressors in the unit-root fit"
        )


def adf_test(series, max_lag: int | None = None) -> AdfResult:
    """Unit-root check for one series.

    Lag order is chosen by AIC over models estimated on the sample trimmed
    at ``max_lag`` (so every candidate sees identical rows), then the
    winning order is refit on all rows it can use.  ``max_lag`` defaults
    to ``floor(12 * (n/100) ** 0.25)``.
    """
    x = np.asarray(series, dtype=np.float64).ravel()
    n = x.shape[0]
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")
    if n >= 1 and np.all(x == x[0]):
        raise DegenerateInputError("constant series has no level dynamics to test")
    if max_lag is None:
        max_lag = default_max_lag(n)
        if max_lag < 0 or n - 1 - max_lag < _MIN_USABLE:
            raise SizeError(
                f"series too short for the unit-root check ({n} rows)"
            )
    else:
        if max_lag < 0:
            raise ValueError("max_lag must be non-negative")
        if n - 1 - max_lag < _MIN_USABLE or n - 3 - 2 * max_lag < 1:
            raise SizeError(
                f"series too short for max_lag={max_lag} ({n} rows)"
            )

    dy = np.diff(x)

    # One decomposition of the widest design yields every candidate's
    # residual sum: model with lag p occupies the first p + 2 columns.
    y_trim, x_trim = _design(x, dy, max_lag)
    m = y_trim.shape[0]
    q, r = np.linalg.qr(x_trim)
    c = q.T @ y_trim
    resid_full = y_trim - q @ c
    ssr_full = float(resid_full @ resid_full)
    tail = np.concatenate([np.cumsum((c ** 2)[::-1])[::-1], [0.0]])
    best_lag = 0
    best_aic = math.inf
    for p in range(0, max_lag + 1):
        k = p + 2
        ssr_p = ssr_full + float(tail[k])
        if ssr_p <= 0.0:
            aic = -math.inf
        else:
            aic = m * math.log(ssr_p / m) + 2.0 * k
        if aic < best_aic:
            best_aic = aic
            best_lag = p

    y_fit, x_fit = _design(x, dy, best_lag)
    m2, k = x_fit.shape
    q2, r2 = np.linalg.qr(x_fit)
    _check_rank(r2, m2)
    beta = solve_triangular(r2, q2.T @ y_fit, lower=False)
    resid = y_fit - x_fit @ beta
    ssr = float(resid @ resid)
    dof = m2 - k
    if dof <= 0:
        raise SizeError("no residual degrees of freedom in the unit-root fit")
    sigma2 = ssr / dof
    rinv = solve_triangular(r2, np.eye(k), lower=False)
    var1 = sigma2 * float((rinv @ rinv.T)[1, 1])
    if not (var1 > 0.0 and math.isfinite(var1)):
        raise NumericalError(
            "zero-variance fit: the lagged-level coefficient has no standard error"
        )
    stat = float(beta[1] / math.sqrt(var1))
    if not math.isfinite(stat):
        raise NumericalError("unit-root statistic is not finite")

    cv1, cv5, cv10 = CRITICAL_VALUES
    if stat < cv1:
        verdict = Verdict.STATIONARY_1
    elif stat < cv5:
        verdict = Verdict.STATIONARY_5
    elif stat < cv10:
        verdict = Verdict.STATIONARY_10
    else:
        verdict = Verdict.NON_STATIONARY
    return AdfResult(stat, best_lag, CRITICAL_VALUES, verdict, m2)


def adf_report(frame, max_lag: int | None = None) -> list[tuple[str, AdfResult]]:
    """Run the unit-root check on every channel, in channel order.

    Accepts a raw frame (must be gap-free) or a differenced frame.  Errors
    from a single channel are re-raised with the channel named.
    """
    mask = getattr(frame, "missing_mask", None)
    if mask is not None and mask.any():
        raise ValueError("frame has missing cells; repair gaps before testing")
    out: list[tuple[str, AdfResult]] = []
    for j, name in enumerate(frame.channel_names):
        try:
            out.append((name, adf_test(frame.values[:, j], max_lag=max_lag)))
        except Exception as exc:
            if isinstance(exc, (ValueError, ArithmeticError)):
                raise type(exc)(f"channel {name!r}: {exc}") from exc
            raise
    return out


def adf_table_csv(results: list[tuple[str, AdfResult]], run_digest: str | None = None) -> str:
    """Channels-as-columns report: rows statistic, verdict, 1%, 5%, 10%."""
    lines = []
    if run_digest is not None:
        lines.append(f"# run_digest={run_digest}")
    names = [name for name, _ in results]
    lines.append("," + ",".join(names))
    rows = (
        ("statistic", lambda r: repr(r.statistic)),
        ("verdict", lambda r: r.verdict.value),
        ("1%", lambda r: repr(r.critical_values[0])),
        ("5%", lambda r: repr(r.critical_values[1])),
        ("10%", lambda r: repr(r.critical_values[2])),
    )
    for label, cell in rows:
        lines.append(label + "," + ",".join(cell(res) for _, res in results))
    return "\n".join(lines) + "\n"
