"""Mutual-information scoring and recursive feature elimination."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from watersentry.errors import ShapeError
from watersentry.features import (
    N_BINS,
    FeatureScore,
    equal_frequency_bins,
    mutual_information_scores,
    rfe,
)
from watersentry.models.spec import CostModelSpec
from watersentry.stationarity import difference

from conftest import frame_from_channels


def mi_oracle(bins: np.ndarray, labels: np.ndarray) -> float:
    """Plug-in MI from an explicit joint tally in exact arithmetic."""
    n = len(bins)
    joint: dict[tuple[int, int], int] = {}
    for b, y in zip(bins.tolist(), labels.astype(int).tolist()):
        joint[(b, y)] = joint.get((b, y), 0) + 1
    px: dict[int, int] = {}
    py: dict[int, int] = {}
    for (b, y), c in joint.items():
        px[b] = px.get(b, 0) + c
        py[y] = py.get(y, 0) + c
    total = 0.0
    for (b, y), c in joint.items():
        p = Fraction(c, n)
        ratio = Fraction(c * n, px[b] * py[y])
        total += float(p) * math.log(float(ratio))
    return total


class TestEqualFrequencyBins:
    def test_uniform_occupancy(self):
        bins = equal_frequency_bins(np.arange(160.0))
        counts = np.bincount(bins, minlength=N_BINS)
        assert counts.tolist() == [10] * 16

    def test_rank_based(self):
        x = np.array([5.0, 1.0, 3.0])
        # ranks 2, 0, 1 -> bins floor(rank * 16 / 3)
        assert equal_frequency_bins(x).tolist() == [10, 0, 5]

    def test_monotone_transform_invariance(self, rng):
        x = rng.normal(size=500)
        assert np.array_equal(
            equal_frequency_bins(x), equal_frequency_bins(np.exp(x)))

    def test_ties_keep_stable_order(self):
        x = np.zeros(32)
        bins = equal_frequency_bins(x)
        # stable argsort leaves tied values in index order
        assert bins.tolist() == sorted(bins.tolist())
        assert np.bincount(bins, minlength=N_BINS).tolist() == [2] * 16

    def test_empty_rejected(self):
        with pytest.raises(ShapeError):
            equal_frequency_bins(np.array([]))


class TestMutualInformation:
    def test_feature_equal_to_balanced_label(self):
        y = np.array([False, True] * 512)
        x = y.astype(float)
        scores = mutual_information_scores(x[:, None], labels=y)
        assert scores[0].score == pytest.approx(math.log(2), abs=1e-12)

    def test_independent_feature_near_zero(self):
        rng = np.random.default_rng(404)
        x = rng.normal(size=(10_000, 1))
        y = rng.random(10_000) < 0.5
        scores = mutual_information_scores(x, labels=y)
        assert scores[0].score <= 0.01

    def test_constant_channel_exactly_zero(self):
        y = np.array([False, True] * 50)
        x = np.full((100, 1), 7.0)
        scores = mutual_information_scores(x, labels=y)
        assert scores[0].score == 0.0

    def test_matches_brute_force_tally(self, rng):
        x = rng.normal(size=(800, 3))
        y = (x[:, 0] + 0.5 * rng.normal(size=800)) > 0
        scores = {
            s.channel: s.score
            for s in mutual_information_scores(x, labels=y)
        }
        for j in range(3):
            bins = equal_frequency_bins(x[:, j])
            assert scores[f"f{j}"] == pytest.approx(mi_oracle(bins, y), abs=1e-12)

    def test_sorted_descending(self, rng):
        x = rng.normal(size=(500, 4))
        y = x[:, 2] > 0
        scores = mutual_information_scores(x, labels=y)
        vals = [s.score for s in scores]
        assert vals == sorted(vals, reverse=True)
        assert scores[0].channel == "f2"

    def test_monotone_transform_leaves_scores_unchanged(self, rng):
        x = rng.normal(size=(400, 1))
        y = x[:, 0] > 0.3
        a = mutual_information_scores(x, labels=y)[0].score
        b = mutual_information_scores(np.tanh(x) * 3 + 5, labels=y)[0].score
        assert a == b

    def test_score_bounded_by_label_entropy(self, rng):
        for _ in range(5):
            x = rng.normal(size=(300, 2))
            y = rng.random(300) < 0.2
            n_pos = int(y.sum())
            if n_pos in (0, 300):
                continue
            p = n_pos / 300
            h = -(p * math.log(p) + (1 - p) * math.log(1 - p))
            for s in mutual_information_scores(x, labels=y):
                assert -1e-12 <= s.score <= h + 1e-12

    def test_accepts_differenced_frame(self, rng):
        f = frame_from_channels({
            "a": rng.normal(size=50).cumsum(),
            "b": rng.normal(size=50).cumsum(),
        }, labels=rng.random(50) < 0.4)
        scores = mutual_information_scores(difference(f))
        assert {s.channel for s in scores} == {"a", "b"}

    def test_length_mismatch(self, rng):
        with pytest.raises(ShapeError):
            mutual_information_scores(rng.normal(size=(10, 2)),
                                      labels=np.zeros(9, dtype=bool))

    def test_labels_required_for_plain_matrix(self, rng):
        with pytest.raises(ValueError):
            mutual_information_scores(rng.normal(size=(10, 2)))

    @given(seed=st.integers(min_value=0, max_value=2**31 - 1))
    def test_symmetry_of_estimator(self, seed):
        # the plug-in sum is symmetric in (x, y); check against a tally
        # built with the roles swapped
        rng = np.random.default_rng(seed)
        x = rng.normal(size=120)
        y = rng.random(120) < 0.3
        bins = equal_frequency_bins(x)
        assert mi_oracle(bins, y) == pytest.approx(
            mi_oracle_swapped(bins, y), abs=1e-12)


def mi_oracle_swapped(bins: np.ndarray, labels: np.ndarray) -> float:
    n = len(bins)
    joint: dict[tuple[int, int], int] = {}
    for y, b in zip(labels.astype(int).tolist(), bins.tolist()):
        joint[(y, b)] = joint.get((y, b), 0) + 1
    pa: dict[int, int] = {}
    pb: dict[int, int] = {}
    for (a, b), c in joint.items():
        pa[a] = pa.get(a, 0) + c
        pb[b] = pb.get(b, 0) + c
    total = 0.0
    for (a, b), c in joint.items():
        total += (c / n) * math.log(c * n / (pa[a] * pb[b]))
    return total


class TestRfe:
    def _spec(self, learner="logistic", **kw):
        kw.setdefault("seed", 13)
        kw.setdefault("n_trees", 15)
        return CostModelSpec(learner=learner, **kw)

    def test_label_feature_survives_to_k1(self, rng):
        y = rng.random(300) < 0.3
        x = np.column_stack([
            rng.normal(size=300),
            y.astype(float),
            rng.normal(size=300),
        ])
        for learner in ("logistic", "forest"):
            ranking = rfe(self._spec(learner), x, y, 1)
            assert ranking.selected == ("f1",)
            assert ranking.ranking["f1"] == 1

    def test_noise_eliminated_first(self, rng):
        n = 2000
        y = rng.random(n) < 0.25
        informative = np.column_stack([
            y + 0.3 * rng.normal(size=n),
            2 * y + 0.4 * rng.normal(size=n),
        ])
        noise = rng.normal(size=(n, 1))
        x = np.hstack([informative, noise])
        spec = self._spec("forest")
        ranking = rfe(spec, x, y, 2)
        assert ranking.eliminated[0] == "f2"
        # oracle: the first-round fit itself ranks the noise column last
        from watersentry.models import train
        model = train(spec, x, y, ["f0", "f1", "f2"])
        assert int(np.argmin(model.importances())) == 2

    def test_target_k_equal_to_width(self, rng):
        x = rng.normal(size=(100, 4))
        y = x[:, 0] > 0
        ranking = rfe(self._spec(), x, y, 4)
        assert ranking.eliminated == ()
        assert set(ranking.selected) == {"f0", "f1", "f2", "f3"}

    def test_ranks_are_a_permutation(self, rng):
        x = rng.normal(size=(200, 5))
        y = (x[:, 1] + x[:, 3]) > 0.5
        ranking = rfe(self._spec(), x, y, 2)
        assert sorted(ranking.ranking.values()) == [1, 2, 3, 4, 5]
        assert len(ranking.selected) == 2
        assert len(ranking.eliminated) == 3

    @pytest.mark.parametrize("bad", [0, 6, -1])
    def test_target_k_out_of_range(self, rng, bad):
        x = rng.normal(size=(50, 5))
        y = x[:, 0] > 0
        with pytest.raises(ValueError):
            rfe(self._spec(), x, y, bad)

    def test_target_k_type_checked(self, rng):
        x = rng.normal(size=(50, 3))
        y = x[:, 0] > 0
        with pytest.raises(ValueError):
            rfe(self._spec(), x, y, 2.5)
        with pytest.raises(ValueError):
            rfe(self._spec(), x, y, True)

    def test_scan_mode_records_every_size(self, rng):
        x = rng.normal(size=(240, 4))
        y = (x[:, 0] - x[:, 2]) > 0.2
        ranking = rfe(self._spec(), x, y, "scan", cv_k=3, cv_repeats=2)
        assert sorted(ranking.per_k_scores) == [1, 2, 3, 4]
        for scores in ranking.per_k_scores.values():
            assert len(scores) == 6
        assert 1 <= len(ranking.selected) <= 4

    def test_scan_selects_best_mean_f1(self, rng):
        x = rng.normal(size=(240, 3))
        y = x[:, 0] > 0.1
        ranking = rfe(self._spec(), x, y, "scan", cv_k=3, cv_repeats=1)

        def mean_f1(size):
            vals = [v for v in ranking.per_k_scores[size] if not math.isnan(v)]
            return sum(vals) / len(vals) if vals else -math.inf

        best = max(sorted(ranking.per_k_scores), key=lambda s: (mean_f1(s), -s))
        assert len(ranking.selected) == best
        # the selected set is the rank prefix of that size
        by_rank = sorted(ranking.ranking, key=ranking.ranking.get)
        assert set(ranking.selected) == set(by_rank[:best])

    def test_fixed_k_matches_rank_prefix(self, rng):
        x = rng.normal(size=(300, 5))
        y = (x[:, 1] - 0.5 * x[:, 4]) > 0
        r3 = rfe(self._spec(), x, y, 3)
        by_rank = sorted(r3.ranking, key=r3.ranking.get)
        assert set(r3.selected) == set(by_rank[:3])

    def test_deterministic(self, rng):
        x = rng.normal(size=(150, 4))
        y = x[:, 0] > 0
        a = rfe(self._spec("forest"), x, y, 2)
        b = rfe(self._spec("forest"), x, y, 2)
        assert a.ranking == b.ranking
        assert a.selected == b.selected

    def test_non_2d_rejected(self):
        with pytest.raises(ShapeError):
            rfe(self._spec(), np.zeros(5), np.zeros(5, dtype=bool), 1)
