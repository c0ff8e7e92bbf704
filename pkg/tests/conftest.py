import numpy as np
import pytest

from src.encoder.model import EncoderConfig, init_encoder, zero_attention
from src.encoder.persistence import save_encoder


@pytest.fixture
def tiny_config():
    return EncoderConfig(num_layers=2, num_heads=2, d_model=8, d_kv=4, d_ff=16, vocab_size=32, seed=7)


@pytest.fixture
def tiny_weights(tiny_config):
    return init_encoder(tiny_config)


@pytest.fixture
def model_path(tmp_path, tiny_weights):
    return save_encoder(tiny_weights, tmp_path / "model.json")


@pytest.fixture
def zero_model_path(tmp_path, tiny_weights):
    return save_encoder(zero_attention(tiny_weights), tmp_path / "zero_model.json")


@pytest.fixture
def rng():
    return np.random.default_rng(42)
