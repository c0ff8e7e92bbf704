import math

import numpy as np
import pytest

from src.analytic.gaussian import solve_tau_entropy, solve_tau_maxprob
from src.calibration.alignment import (
    AlignmentMode,
    CalibrationResult,
    GaussianLogitSource,
    calibrate,
    find_s,
    is_monotone,
    log_baseline_tau,
)
from src.configs.settings import CalibrationSettings
from src.database.sequence_store import random_sequences
from src.encoder.model import EncoderConfig, ToyEncoder, init_encoder, zero_attention
from src.utils.exceptions import EmptyInputError, PreconditionError, ShapeError, UsageError


class ConstantSource:
    """Rows whose statistics depend only on length, identical at every temperature."""

    def __init__(self, values):
        self.values = values

    def sequence_stats(self, tokens, tau):
        value = self.values[len(tokens)]
        return np.full(4, value), np.full(4, value)


class TestAlignmentMode:
    def test_parse(self):
        assert AlignmentMode.parse("max") is AlignmentMode.MAX_PROB
        assert AlignmentMode.parse("ent") is AlignmentMode.ENTROPY

    def test_unknown(self):
        with pytest.raises(UsageError):
            AlignmentMode.parse("median")


class TestFindS:
    def test_single_token_sequence(self, tiny_weights):
        encoder = ToyEncoder(tiny_weights)
        assert find_s(encoder, [[5]], 1.0, AlignmentMode.MAX_PROB) == 1.0
        assert find_s(encoder, [[5]], 1.0, AlignmentMode.ENTROPY) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("tau", [0.5, 1.0, 1.7])
    def test_zeroed_attention(self, tiny_weights, tau):
        encoder = ToyEncoder(zero_attention(tiny_weights))
        sequences = random_sequences(2, 64, seed=0, vocab_size=32)
        assert find_s(encoder, sequences, tau, AlignmentMode.ENTROPY) == pytest.approx(math.log(64), abs=1e-9)

    def test_empty(self, tiny_weights):
        with pytest.raises(EmptyInputError):
            find_s(ToyEncoder(tiny_weights), [], 1.0, AlignmentMode.ENTROPY)


class TestCalibrate:
    def test_rejects_non_increasing_length(self):
        source = GaussianLogitSource()
        with pytest.raises(PreconditionError):
            calibrate(source, [[0] * 16], [[0] * 16], AlignmentMode.ENTROPY)

    def test_rejects_mixed_lengths(self):
        source = GaussianLogitSource()
        with pytest.raises(ShapeError):
            calibrate(source, [[0] * 8], [[0] * 16, [0] * 17], AlignmentMode.ENTROPY)

    def test_matched_statistics_pick_largest_temperature(self):
        source = ConstantSource({8: 0.4, 9: 0.4})
        result = calibrate(source, [[0] * 8], [[0] * 9], AlignmentMode.MAX_PROB)
        assert result.tau_ex == 1.0

    def test_ties_go_to_larger_temperature(self):
        result = calibrate(ConstantSource({8: 0.4, 9: 0.1}), [[0] * 8], [[0] * 9], AlignmentMode.MAX_PROB)
        assert result.tau_ex == 1.0
        assert len(result.grid) == 11

    def test_grid_is_default(self):
        result = calibrate(GaussianLogitSource(rows_per_sequence=16), [[1] * 32], [[1] * 64], AlignmentMode.ENTROPY)
        assert [tau for tau, _ in result.grid] == list(CalibrationSettings.TAU_GRID)
        assert result.tau_ex in CalibrationSettings.TAU_GRID
        assert result.monotone

    def test_workers_do_not_change_result(self):
        source = GaussianLogitSource(rows_per_sequence=32, seed=3)
        short, long = random_sequences(2, 64, seed=1), random_sequences(2, 256, seed=2)
        serial = calibrate(source, short, long, AlignmentMode.MAX_PROB, workers=1)
        threaded = calibrate(source, short, long, AlignmentMode.MAX_PROB, workers=4)
        assert serial.grid == threaded.grid
        assert serial.tau_ex == threaded.tau_ex

    def test_entropy_mode_matches_closed_form_on_gaussian_logits(self):
        source = GaussianLogitSource(sigma=1.0, rows_per_sequence=256, seed=0)
        short = random_sequences(4, 512, seed=1)
        long = random_sequences(2, 2048, seed=2)
        result = calibrate(source, short, long, AlignmentMode.ENTROPY)
        assert result.tau_ex == 0.50
        assert abs(result.tau_ex - solve_tau_entropy(512, 2048, 1.0, 1.0)) <= 0.05

    def test_max_prob_mode_matches_quadratic_root(self):
        source = GaussianLogitSource(sigma=1.0, l_max=4.0, rows_per_sequence=256, seed=0)
        short = random_sequences(4, 512, seed=1)
        long = random_sequences(2, 2048, seed=2)
        result = calibrate(source, short, long, AlignmentMode.MAX_PROB)
        analytic = solve_tau_maxprob(512, 2048, result.target_stat, 1.0, 1.0)
        assert abs(result.tau_ex - analytic) <= 0.05 + 1e-9

    def test_refine_reports_separate_temperature(self):
        source = GaussianLogitSource(sigma=1.0, rows_per_sequence=64, seed=0)
        result = calibrate(source, random_sequences(2, 128, seed=1), random_sequences(2, 256, seed=2),
                           AlignmentMode.ENTROPY, refine=True)
        assert result.tau_ex in CalibrationSettings.TAU_GRID
        assert result.tau_refined is not None
        assert 0.5 <= result.tau_refined <= 1.0
        assert abs(result.achieved_refined - result.target_stat) <= abs(result.achieved_stat - result.target_stat)

    def test_toy_encoder_calibration_restores_max_probability(self):
        encoder = ToyEncoder(init_encoder(EncoderConfig(seed=0)))
        short = random_sequences(20, 128, seed=1)
        long = random_sequences(20, 1024, seed=2)

        result = calibrate(encoder, short, long, AlignmentMode.MAX_PROB)
        assert result.tau_ex < 1.0
        assert abs(result.achieved_stat - result.target_stat) < abs(result.stat_at(1.0) - result.target_stat)
        assert abs(result.achieved_stat - result.target_stat) / result.target_stat <= 0.15


class TestCalibrationResult:
    def test_json_round_trip(self):
        result = CalibrationResult(
            tau_ex=0.8, mode=AlignmentMode.ENTROPY, target_stat=3.0, achieved_stat=3.1,
            grid=[(1.0, 3.5), (0.8, 3.1)], L_tr=128, L_ex=1024, num_sequences=(3, 4),
        )
        restored = CalibrationResult.from_json(result.to_json())
        assert restored == result
        assert restored.stat_at(0.8) == 3.1

    def test_grid_csv(self):
        result = CalibrationResult(
            tau_ex=1.0, mode=AlignmentMode.MAX_PROB, target_stat=0.5, achieved_stat=0.5,
            grid=[(1.0, 0.5), (0.95, 0.55)], L_tr=4, L_ex=8,
        )
        assert result.grid_csv().splitlines() == ["tau,stat", "1,0.5", "0.95,0.55"]


class TestMonotone:
    def test_entropy_grid(self):
        assert is_monotone([(1.0, 3.0), (0.5, 2.0)], AlignmentMode.ENTROPY)
        assert not is_monotone([(1.0, 2.0), (0.5, 3.0)], AlignmentMode.ENTROPY)

    def test_max_prob_grid(self):
        assert is_monotone([(1.0, 0.2), (0.5, 0.6)], AlignmentMode.MAX_PROB)


class TestLogBaseline:
    @pytest.mark.parametrize("L_ex, expected", [
        (1024, 0.90), (2048, 0.82), (4096, 0.75), (8192, 0.69), (15000, 0.65),
        (1700, 0.84), (3300, 0.77), (5000, 0.73),
    ])
    def test_training_length_512(self, L_ex, expected):
        assert log_baseline_tau(512, L_ex) == pytest.approx(expected, abs=0.005)

    @pytest.mark.parametrize("L_ex, expected", [(1000, 0.96), (2000, 0.87)])
    def test_training_length_768(self, L_ex, expected):
        assert log_baseline_tau(768, L_ex) == pytest.approx(expected, abs=0.005)

    def test_identity(self):
        assert log_baseline_tau(512, 512) == 1.0

    def test_short_lengths_rejected(self):
        with pytest.raises(PreconditionError):
            log_baseline_tau(1, 512)
