import numpy as np
import pytest

from src.tasks.needle import NeedleMode, TauPolicy, dispersed_attention_demo, needle_pmax
from src.utils.exceptions import EmptyInputError, InvalidTemperatureError, PreconditionError


class TestNeedlePmax:
    @pytest.mark.parametrize("length, tau, expected", [(64, 1.0, 0.46040), (1024, 1.0, 0.05062), (1024, 0.5, 0.74434)])
    def test_closed_form_without_junk_spread(self, length, tau, expected):
        assert needle_pmax(4.0, 0.0, length, tau) == pytest.approx(expected, abs=1e-4)

    def test_monte_carlo_agrees_with_closed_form(self):
        closed = needle_pmax(4.0, 1.0, 1024, 1.0)
        sampled = needle_pmax(4.0, 1.0, 1024, 1.0, NeedleMode.MONTE_CARLO, replicates=10_000, seed=0)
        assert sampled == pytest.approx(closed, rel=0.05)

    def test_monte_carlo_is_exact_without_spread(self):
        sampled = needle_pmax(4.0, 0.0, 100, 0.7, NeedleMode.MONTE_CARLO, replicates=300)
        assert sampled == pytest.approx(needle_pmax(4.0, 0.0, 100, 0.7), abs=1e-12)

    def test_small_temperature_stays_finite(self):
        assert needle_pmax(4.0, 1.0, 1024, 0.02) == pytest.approx(0.0, abs=1e-300)
        assert needle_pmax(4.0, 0.0, 1024, 0.01) == pytest.approx(1.0)

    def test_dispersal(self):
        values = [needle_pmax(4.0, 1.0, length, 1.0) for length in (64, 128, 256, 512, 1024)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_invalid(self):
        with pytest.raises(PreconditionError):
            needle_pmax(4.0, 1.0, 0, 1.0)
        with pytest.raises(InvalidTemperatureError):
            needle_pmax(4.0, 1.0, 10, 0.0)


class TestDispersedAttentionDemo:
    def test_fixed_policy_decreases(self):
        curve = dispersed_attention_demo(4.0, 1.0, [64, 256, 1024, 4096])
        fixed = curve.curve(TauPolicy.FIXED_1)
        assert np.all(np.diff(fixed) < 0)
        np.testing.assert_array_equal(curve.temperatures[0], 1.0)

    def test_aligned_policy_beats_fixed_at_long_length(self):
        curve = dispersed_attention_demo(4.0, 1.0, [64, 1024])
        assert curve.temperatures[1, 1] == pytest.approx(1 / np.sqrt(1 + 2 * np.log(16)))
        assert curve.curve(TauPolicy.PROP2_ALIGNED)[1] > curve.curve(TauPolicy.FIXED_1)[1]

    def test_single_length_policies_coincide(self):
        curve = dispersed_attention_demo(4.0, 1.0, [64])
        assert curve.curve(TauPolicy.FIXED_1)[0] == pytest.approx(curve.curve(TauPolicy.PROP2_ALIGNED)[0])

    def test_achievability(self):
        assert dispersed_attention_demo(4.0, 1.0, [64, 256, 1024]).achievable == [True, True, False]

    def test_csv(self):
        lines = dispersed_attention_demo(4.0, 1.0, [64, 128]).to_csv().splitlines()
        assert lines[0] == "L,tau,p_needle,policy"
        assert len(lines) == 1 + 2 * 2
        assert lines[1].endswith(",fixed_1")
        assert lines[-1].endswith(",prop2_aligned")

    def test_zero_spread_needs_fixed_policy(self):
        with pytest.raises(PreconditionError):
            dispersed_attention_demo(4.0, 0.0, [64, 128])
        curve = dispersed_attention_demo(4.0, 0.0, [64, 128], policies=[TauPolicy.FIXED_1])
        assert curve.policies == [TauPolicy.FIXED_1]

    def test_invalid_grid(self):
        with pytest.raises(EmptyInputError):
            dispersed_attention_demo(4.0, 1.0, [])
        with pytest.raises(PreconditionError):
            dispersed_attention_demo(4.0, 1.0, [128, 64])
