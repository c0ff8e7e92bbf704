import math

import numpy as np
import pytest

from src.attention.softmax_stats import (
    AttentionStats,
    Distribution,
    LogitVector,
    row_stats,
    softmax_rows,
    softmax_tau,
    stats,
    zero_mean,
)
from src.utils.exceptions import EmptyInputError, InvalidTemperatureError, ShapeError


class TestSoftmaxTau:
    def test_uniform(self):
        d = softmax_tau(np.zeros(4), 1.0)
        np.testing.assert_allclose(d.probs, [0.25] * 4)

    def test_two_logits(self):
        np.testing.assert_allclose(softmax_tau(np.array([2.0, 0.0]), 1.0).probs, [0.880797, 0.119203], atol=1e-6)
        np.testing.assert_allclose(softmax_tau(np.array([2.0, 0.0]), 0.5).probs, [0.982014, 0.017986], atol=1e-6)

    def test_accepts_logit_vector(self):
        d = softmax_tau(LogitVector(values=[1.0, 1.0]), 2.0)
        assert d.temperature == 2.0
        np.testing.assert_allclose(d.probs, [0.5, 0.5])

    def test_large_logits_do_not_overflow(self):
        d = softmax_tau(np.array([1000.0, 0.0, -1000.0]), 1.0)
        assert np.all(np.isfinite(d.probs))
        assert d.probs[0] == pytest.approx(1.0)

    @pytest.mark.parametrize("tau", [0.0, -1.0])
    def test_non_positive_temperature(self, tau):
        with pytest.raises(InvalidTemperatureError):
            softmax_tau(np.array([1.0, 2.0]), tau)

    def test_empty_vector(self):
        with pytest.raises(EmptyInputError):
            softmax_tau(np.array([]), 1.0)


class TestStats:
    def test_uniform(self):
        result = stats(softmax_tau(np.zeros(4), 1.0))
        assert result.p_max == pytest.approx(0.25)
        assert result.entropy == pytest.approx(1.386294, abs=1e-6)
        assert result.length == 4

    def test_one_hot(self):
        result = stats(Distribution(probs=np.array([0.0, 1.0, 0.0]), temperature=1.0))
        assert result.p_max == 1.0
        assert result.entropy == 0.0

    def test_two_logits(self):
        result = stats(softmax_tau(np.array([2.0, 0.0]), 1.0))
        assert result.p_max == pytest.approx(0.880797, abs=1e-6)
        assert result.entropy == pytest.approx(0.365334, abs=1e-6)

    def test_row_stats_zero_probability_entry(self):
        p_max, entropy = row_stats(np.array([[0.0, -1e6]]), 1.0)
        assert p_max[0] == 1.0
        assert entropy[0] == 0.0

    def test_invalid_distribution(self):
        with pytest.raises(ShapeError):
            Distribution(probs=np.array([0.5, 0.6]), temperature=1.0)

    def test_mean_is_row_weighted(self):
        merged = AttentionStats.mean([
            AttentionStats(p_max=1.0, entropy=0.0, length=8, rows=3),
            AttentionStats(p_max=0.0, entropy=4.0, length=8, rows=1),
        ])
        assert merged.p_max == pytest.approx(0.75)
        assert merged.entropy == pytest.approx(1.0)
        assert merged.rows == 4

    def test_mean_of_nothing(self):
        with pytest.raises(EmptyInputError):
            AttentionStats.mean([])


class TestZeroMean:
    def test_examples(self):
        np.testing.assert_allclose(zero_mean(np.array([1.0, 2.0, 3.0])).values, [-1.0, 0.0, 1.0])
        np.testing.assert_allclose(zero_mean(np.array([5.0, 5.0])).values, [0.0, 0.0])

    def test_keeps_provenance(self):
        assert zero_mean(LogitVector(values=[1.0, 3.0], provenance=(0, 1, 2))).provenance == (0, 1, 2)

    def test_softmax_unchanged(self, rng):
        l = rng.normal(size=50) * 3 + 7
        for tau in (0.3, 1.0, 4.0):
            np.testing.assert_allclose(softmax_tau(zero_mean(l), tau).probs, softmax_tau(l, tau).probs, atol=1e-12)


class TestLogitVector:
    def test_empty(self):
        with pytest.raises(EmptyInputError):
            LogitVector(values=[])

    def test_two_dimensional(self):
        with pytest.raises(ShapeError):
            LogitVector(values=np.zeros((2, 2)))

    def test_non_finite(self):
        with pytest.raises(ShapeError):
            LogitVector(values=[0.0, np.inf])


class TestSoftmaxProperties:
    """Property checks over 1000 random logit vectors."""

    @pytest.fixture
    def rows(self, rng):
        lengths_scale = rng.uniform(0.1, 5.0, size=(1000, 1))
        return rng.normal(size=(1000, 37)) * lengths_scale

    def test_shift_invariance(self, rows, rng):
        shifts = rng.uniform(-50, 50, size=(1000, 1))
        for tau in (0.5, 1.0, 2.0):
            np.testing.assert_allclose(softmax_rows(rows + shifts, tau), softmax_rows(rows, tau), atol=1e-12)

    def test_argmax_invariance(self, rows):
        for tau in (0.1, 0.5, 1.0, 3.0, 10.0):
            np.testing.assert_array_equal(softmax_rows(rows, tau).argmax(axis=1), rows.argmax(axis=1))

    def test_temperature_monotonicity(self, rows):
        taus = [0.25, 0.5, 0.75, 1.0, 1.5, 3.0]
        results = [row_stats(rows, tau) for tau in taus]
        for (p_low, h_low), (p_high, h_high) in zip(results, results[1:]):
            assert np.all(h_low < h_high)
            assert np.all(p_low > p_high)

    def test_bounds(self, rows):
        length = rows.shape[1]
        for tau in (0.1, 1.0, 10.0):
            p_max, entropy = row_stats(rows, tau)
            assert np.all(entropy >= 0)
            assert np.all(entropy <= math.log(length) + 1e-12)
            assert np.all(p_max >= 1.0 / length - 1e-12)
            assert np.all(p_max <= 1.0)

    def test_sums_to_one(self, rows):
        np.testing.assert_allclose(softmax_rows(rows, 0.7).sum(axis=1), 1.0, atol=1e-9)

    def test_temperature_limits(self, rows):
        length = rows.shape[1]
        p_cold, _ = row_stats(rows * 0 + np.arange(length), 1e-3)
        np.testing.assert_allclose(p_cold, 1.0, atol=1e-3)
        _, h_hot = row_stats(rows, 1e3)
        np.testing.assert_allclose(h_hot, math.log(length), atol=1e-3)
