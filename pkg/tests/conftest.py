import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from watersentry.frame import CHANNELS, TimeSeriesFrame

# Single-CPU sandbox: first numba call pays JIT cost, so wall-clock
# deadlines would flake. Behaviour stays deterministic regardless.
settings.register_profile(
    "ci",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize=True,
)
settings.load_profile("ci")


def make_frame(
    values: np.ndarray,
    labels=None,
    mask=None,
    channel_names: tuple[str, ...] = CHANNELS,
    start: str = "2016-01-01T00:00:00",
    step_s: int = 60,
) -> TimeSeriesFrame:
    """Frame with a minute-level clock and the given value matrix."""
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    ts = np.datetime64(start, "s") + np.arange(n, dtype=np.int64) * step_s
    if labels is None:
        labels = np.zeros(n, dtype=bool)
    if mask is None:
        mask = np.isnan(values)
    return TimeSeriesFrame(ts, channel_names, values, labels, mask)


def frame_from_channels(channels: dict[str, np.ndarray], labels=None, **kw) -> TimeSeriesFrame:
    names = tuple(channels)
    values = np.column_stack([np.asarray(channels[c], dtype=np.float64) for c in names])
    return make_frame(values, labels=labels, channel_names=names, **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(np.random.SeedSequence(20260819))


@pytest.fixture
def write_csv(tmp_path):
    """Write CSV text to a temp file, returning its path."""
    counter = [0]

    def _write(text: str):
        counter[0] += 1
        p = tmp_path / f"in_{counter[0]}.csv"
        p.write_text(text, encoding="utf-8")
        return p

    return _write


def tiny_csv_text(rows: list[str], channels: tuple[str, ...] = ("Tp", "Cl")) -> str:
    header = "Time," + ",".join(channels) + ",EVENT"
    return "\n".join([header, *rows]) + "\n"
