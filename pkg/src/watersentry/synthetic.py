"""Seeded generator of drinking-water-like sensor frames.

Produces minute-cadence frames with nine channels wandering slowly around
realistic operating levels, rare labelled anomaly episodes, and unlabelled
single-channel disturbances.  An anomaly episode walks the three
quality channels away from their operating level as a staircase in each
channel's characteristic event direction (chlorine and redox drop,
turbidity rises) with smaller rebounds between steps, so within an
episode the one-step differences are elevated on several channels at
once and the full-size steps share a consistent direction.  After the
episode the level relaxes back exponentially, slowly enough that the
per-row recovery differences stay inside the sensor noise.
Single-channel disturbances mimic sensor glitches: smaller than episode
steps on the quality channels and labelled negative, they act as hard
negatives.
Everything derives from one seed, so a given configuration always
yields the identical frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

import numpy as np
from scipy.signal import lfilter

from .frame import CHANNELS, TIME_FORMAT, TimeSeriesFrame

_MASK64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class ChannelProfile:
    base: float
    noise: float  # innovation scale of the slow AR(1) wander
    # signed anomaly pulse: magnitude is the amplitude, sign is the
    # channel's characteristic event direction; None = never perturbed
    pulse: float | None


# Operating levels loosely follow a municipal supply: temperature (C),
# chlorine (mg/l), pH, redox potential (mV), conductivity (uS/cm),
# turbidity (NTU), a second chlorine sensor, and two flow rates (m3/h).
# Contamination consumes chlorine and lowers the redox potential while
# turbidity climbs, hence the pulse signs.
PROFILES: dict[str, ChannelProfile] = {
    "Tp": ChannelProfile(8.3, 0.004, None),
    "Cl": ChannelProfile(0.115, 0.0012, -0.020),
    "pH": ChannelProfile(8.32, 0.0015, None),
    "Redox": ChannelProfile(748.0, 0.30, -6.0),
    "Leit": ChannelProfile(210.0, 0.12, None),
    "Trueb": ChannelProfile(0.0165, 0.0008, 0.012),
    "Cl_2": ChannelProfile(0.118, 0.0009, None),
    "Fm": ChannelProfile(1440.0, 1.2, None),
    "Fm_2": ChannelProfile(687.0, 0.8, None),
}

EVENT_CHANNELS: tuple[str, ...] = tuple(
    c for c in CHANNELS if PROFILES[c].pulse is not None
)

# Channels that sensor glitches may hit, with glitch amplitude.  On the
# event channels glitches stay below the episode rebound band (0.35x
# pulse at minimum) even counting the bounce-back difference, so a
# one-row excursion is never mistakable for any episode step.
_GLITCH_AMPL: dict[str, float] = {
    "Cl": 0.0036,
    "Redox": 1.1,
    "Trueb": 0.0022,
    "pH": 0.015,
    "Leit": 1.2,
}

_AR_THETA = 0.002
_REBOUND = 0.5  # rebound step size as a share of the main step
_RECOVERY_TAU = 25.0  # rows; relaxation back to the operating level
_GLITCH_RATE = 0.015
DEFAULT_START = "2016-02-15 00:00:00"


def synthetic_frame(
    n_rows: int,
    seed: int,
    anomaly_rate: float = 0.0142,
    start: str = DEFAULT_START,
    cadence_s: int = 60,
    missing_rate: float = 0.0,
) -> TimeSeriesFrame:
    """Generate one labelled frame.

    ``anomaly_rate`` is the target share of positive rows; episodes of
    4-10 rows are placed without overlap until the budget is met.
    ``missing_rate`` blanks that share of cells at random (for exercising
    gap repair); the first row is never blanked.
    """
    if n_rows < 8:
        raise ValueError("n_rows must be at least 8")
    if not (0.0 <= anomaly_rate < 0.5):
        raise ValueError("anomaly_rate must lie in [0, 0.5)")
    if not (0.0 <= missing_rate < 1.0):
        raise ValueError("missing_rate must lie in [0, 1)")
    base_entropy = seed & _MASK64
    d = len(CHANNELS)

    values = np.empty((n_rows, d))
    for j, name in enumerate(CHANNELS):
        prof = PROFILES[name]
        rng = np.random.default_rng(np.random.SeedSequence([base_entropy, 0, j]))
        eps = rng.standard_normal(n_rows) * prof.noise
        wander = lfilter([1.0], [1.0, -(1.0 - _AR_THETA)], eps)
        values[:, j] = prof.base + wander

    labels = np.zeros(n_rows, dtype=bool)
    rng_ev = np.random.default_rng(np.random.SeedSequence([base_entropy, 1]))
    target_pos = int(round(anomaly_rate * n_rows))
    occupied = np.zeros(n_rows, dtype=bool)
    placed = 0
    attempts = 0
    sig_idx = [CHANNELS.index(c) for c in EVENT_CHANNELS]
    while placed < target_pos and attempts < 50 * max(1, target_pos):
        attempts += 1
        length = int(rng_ev.integers(4, 11))
        length = min(length, target_pos - placed)
        if length < 1:
            break
        lo = 2
        hi = n_rows - length - 2
        if hi <= lo:
            break
        s = int(rng_ev.integers(lo, hi))
        if occupied[max(0, s - 3) : s + length + 3].any():
            continue
        occupied[s : s + length] = True
        placed += length
        for c in sig_idx:
            pulse = PROFILES[CHANNELS[c]].pulse
            # walk away from the operating level: full steps in the
            # characteristic direction, smaller rebounds in between
            level = 0.0
            for t in range(length):
                mag = pulse * (0.7 + 0.6 * rng_ev.random())
                level += mag if t % 2 == 0 else -_REBOUND * mag
                values[s + t, c] += level
            # relax back so slowly that each recovery step hides
            # inside the wander noise
            tail = min(n_rows - (s + length), int(6 * _RECOVERY_TAU))
            if tail > 0:
                decay = np.exp(-np.arange(1, tail + 1) / _RECOVERY_TAU)
                values[s + length : s + length + tail, c] += level * decay
    labels[occupied] = True

    # single-channel glitches: sharp one-row excursions, labelled negative
    rng_gl = np.random.default_rng(np.random.SeedSequence([base_entropy, 2]))
    glitch_names = list(_GLITCH_AMPL)
    n_glitch = int(round(_GLITCH_RATE * n_rows))
    for _ in range(n_glitch):
        r = int(rng_gl.integers(2, n_rows - 1))
        if occupied[max(0, r - 2) : r + 2].any():
            continue
        name = glitch_names[int(rng_gl.integers(0, len(glitch_names)))]
        c = CHANNELS.index(name)
        sign = 1.0 if rng_gl.random() < 0.5 else -1.0
        values[r, c] += sign * _GLITCH_AMPL[name] * (0.5 + 0.8 * rng_gl.random())

    mask = np.zeros((n_rows, d), dtype=bool)
    if missing_rate > 0.0:
        rng_miss = np.random.default_rng(np.random.SeedSequence([base_entropy, 3]))
        mask = rng_miss.random((n_rows, d)) < missing_rate
        mask[0, :] = False
    vals_out = np.where(mask, np.nan, values)

    t0 = np.datetime64(datetime.strptime(start, TIME_FORMAT), "s")
    timestamps = t0 + np.arange(n_rows).astype("timedelta64[s]") * cadence_s
    return TimeSeriesFrame(timestamps, CHANNELS, vals_out, labels, mask)
