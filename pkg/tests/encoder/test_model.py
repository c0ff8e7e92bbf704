import math

import numpy as np
import pytest

from src.database.sequence_store import random_sequences
from src.encoder.model import (
    EncoderConfig,
    ToyEncoder,
    collect_logit_rows,
    forward,
    init_encoder,
    zero_attention,
)
from src.rpe.bias import build_bias_matrix
from src.utils.exceptions import EmptyInputError, EncoderConfigError, InvalidTemperatureError, VocabularyError


class TestInitEncoder:
    def test_deterministic(self, tiny_config):
        first, second = init_encoder(tiny_config), init_encoder(tiny_config)
        np.testing.assert_array_equal(first.embedding, second.embedding)
        for a, b in zip(first.layers, second.layers):
            np.testing.assert_array_equal(a.query, b.query)
            np.testing.assert_array_equal(a.ff_out, b.ff_out)
        for a, b in zip(first.bucket_tables, second.bucket_tables):
            np.testing.assert_array_equal(a.values, b.values)

    def test_seed_changes_weights(self):
        first = init_encoder(EncoderConfig(seed=1))
        second = init_encoder(EncoderConfig(seed=2))
        assert not np.array_equal(first.embedding, second.embedding)

    def test_head_concatenation_mismatch(self):
        with pytest.raises(EncoderConfigError):
            init_encoder(EncoderConfig(num_heads=4, d_model=60, d_kv=16))

    def test_non_positive_dimension(self):
        with pytest.raises(EncoderConfigError):
            EncoderConfig(num_layers=0).validate()

    def test_projection_scales(self):
        config = EncoderConfig(seed=0)
        layer = init_encoder(config).layers[0]
        assert layer.query.std() == pytest.approx((config.d_model * config.d_kv) ** -0.5, rel=0.05)
        assert layer.key.std() == pytest.approx(config.d_model ** -0.5, rel=0.05)
        assert layer.ff_out.std() == pytest.approx(config.d_ff ** -0.5, rel=0.05)

    def test_shapes(self, tiny_weights, tiny_config):
        tiny_weights.validate()
        assert tiny_weights.embedding.shape == (tiny_config.vocab_size, tiny_config.d_model)
        assert len(tiny_weights.bucket_tables) == tiny_config.num_heads
        assert tiny_weights.layers[0].ff_in.shape == (tiny_config.d_model, tiny_config.d_ff)


class TestForward:
    def test_single_token(self, tiny_weights):
        trace = forward(tiny_weights, [3])
        np.testing.assert_array_equal(trace.p_max, 1.0)
        np.testing.assert_allclose(trace.entropy, 0.0, atol=1e-15)

    def test_trace_cardinality(self, tiny_weights, tiny_config):
        length = 11
        trace = forward(tiny_weights, list(range(length)), record=True)
        assert trace.p_max.shape == (tiny_config.num_layers, tiny_config.num_heads, length)
        assert trace.num_rows == tiny_config.num_layers * tiny_config.num_heads * length
        assert len(list(trace.rows())) == trace.num_rows
        assert trace.hidden_states.shape == (length, tiny_config.d_model)

    def test_deterministic(self, tiny_weights):
        tokens = [1, 5, 9, 2, 31]
        first, second = forward(tiny_weights, tokens, 0.8), forward(tiny_weights, tokens, 0.8)
        np.testing.assert_array_equal(first.p_max, second.p_max)
        np.testing.assert_array_equal(first.hidden_states, second.hidden_states)

    def test_zeroed_attention_is_uniform(self, tiny_weights):
        trace = forward(zero_attention(tiny_weights), list(np.arange(64) % 32), tau=0.6)
        np.testing.assert_allclose(trace.p_max, 1 / 64, atol=1e-12)
        np.testing.assert_allclose(trace.entropy, math.log(64), atol=1e-9)

    def test_lower_temperature_sharpens(self, tiny_weights):
        tokens = random_sequences(1, 40, seed=3, vocab_size=32)[0]
        warm = forward(tiny_weights, tokens, 1.0).layer_stats(0)
        cold = forward(tiny_weights, tokens, 0.5).layer_stats(0)
        assert cold.entropy < warm.entropy
        assert cold.p_max > warm.p_max

    def test_layer_zero_matches_dense_recomputation(self, tiny_weights, tiny_config):
        tokens = [4, 0, 17, 17, 30, 8, 2, 11, 25]
        trace = forward(tiny_weights, tokens, record=True)
        x = tiny_weights.embedding[tokens]
        h = x / np.sqrt(np.mean(x ** 2, axis=-1, keepdims=True) + 1e-6)
        layer = tiny_weights.layers[0]
        q, k = h @ layer.query, h @ layer.key
        d_kv = tiny_config.d_kv
        for head in range(tiny_config.num_heads):
            cols = slice(head * d_kv, (head + 1) * d_kv)
            bias = build_bias_matrix(tiny_weights.bucket_tables[head], len(tokens)).entries
            expected = np.array([
                [q[m, cols] @ k[n, cols] + bias[m, n] for n in range(len(tokens))]
                for m in range(len(tokens))
            ])
            np.testing.assert_allclose(trace.logit_rows[0, head], expected, atol=1e-9)

    def test_unknown_token(self, tiny_weights):
        with pytest.raises(VocabularyError):
            forward(tiny_weights, [0, 32])

    def test_empty_sequence(self, tiny_weights):
        with pytest.raises(EmptyInputError):
            forward(tiny_weights, [])

    def test_invalid_temperature(self, tiny_weights):
        with pytest.raises(InvalidTemperatureError):
            forward(tiny_weights, [1, 2], tau=0.0)

    def test_rows_need_recording(self, tiny_weights):
        with pytest.raises(EmptyInputError):
            list(forward(tiny_weights, [1, 2]).rows())

    def test_layer_stats(self, tiny_weights):
        trace = forward(tiny_weights, list(range(20)))
        layer_means = [trace.layer_stats(layer).entropy for layer in range(2)]
        assert trace.mean_stats().entropy == pytest.approx(np.mean(layer_means))


class TestCollectLogitRows:
    def test_order_and_count(self, tiny_weights, tiny_config):
        length = 6
        rows = list(collect_logit_rows(tiny_weights, [list(range(length))]))
        assert len(rows) == tiny_config.num_layers * tiny_config.num_heads * length
        assert rows[0].provenance == (0, 0, 0)
        assert rows[1].provenance == (0, 0, 1)
        assert rows[length].provenance == (0, 1, 0)

    def test_identical_sequences_repeat(self, tiny_weights):
        tokens = [3, 1, 4, 1, 5]
        rows = list(collect_logit_rows(tiny_weights, [tokens, tokens]))
        half = len(rows) // 2
        for first, second in zip(rows[:half], rows[half:]):
            np.testing.assert_array_equal(first.values, second.values)

    def test_no_sequences(self, tiny_weights):
        with pytest.raises(EmptyInputError):
            list(collect_logit_rows(tiny_weights, []))

    def test_sequence_stats_are_flat(self, tiny_weights):
        p_max, entropy = ToyEncoder(tiny_weights).sequence_stats([1, 2, 3, 4], 1.0)
        assert p_max.shape == entropy.shape == (2 * 2 * 4,)

    def test_layer_rows(self, tiny_weights):
        rows = ToyEncoder(tiny_weights).layer_rows([1, 2, 3, 4, 5], layer=1)
        assert rows.shape == (2 * 5, 5)


class TestDispersedAttention:
    """Longer inputs flatten the attention of seeded encoders."""

    def test_entropy_grows_and_max_probability_falls_with_length(self):
        short, long = [], []
        for seed in range(20):
            encoder = ToyEncoder(init_encoder(EncoderConfig(seed=seed)))
            short.append(encoder.forward(random_sequences(1, 128, seed=100 + seed)[0]).mean_stats())
            long.append(encoder.forward(random_sequences(1, 1024, seed=200 + seed)[0]).mean_stats())
        assert np.mean([item.entropy for item in long]) > np.mean([item.entropy for item in short])
        assert np.mean([item.p_max for item in long]) < np.mean([item.p_max for item in short])
