"""Minimal instrumented T5-style encoder.

Attention logits are Q.K^T plus the relative position bias, with no 1/sqrt(d_kv)
scaling; the query projection is initialised with std (d_model * d_kv) ** -0.5
instead, as T5 does. The bias is computed from the layer-0 bucket tables and
added identically at every layer. Every softmax runs at one global
temperature, and the per-row max probability and entropy are always recorded.
"""
import copy
import logging.config
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.attention.softmax_stats import AttentionStats, LogitVector, row_stats, softmax_rows
from src.configs.log_config import LOGGING
from src.configs.settings import EncoderSettings
from src.rpe.bias import BucketTable, bucket_matrix
from src.utils.exceptions import (
    EmptyInputError,
    EncoderConfigError,
    InvalidTemperatureError,
    VocabularyError,
)

logging.config.dictConfig(LOGGING)
logger = logging.getLogger(__name__)


@dataclass
class EncoderConfig:
    num_layers: int = EncoderSettings.NUM_LAYERS
    num_heads: int = EncoderSettings.NUM_HEADS
    d_model: int = EncoderSettings.D_MODEL
    d_kv: int = EncoderSettings.D_KV
    d_ff: int = EncoderSettings.D_FF
    vocab_size: int = EncoderSettings.VOCAB_SIZE
    seed: int = EncoderSettings.DEFAULT_SEED

    def validate(self) -> None:
        for name in ("num_layers", "num_heads", "d_model", "d_kv", "d_ff", "vocab_size"):
            if getattr(self, name) < 1:
                raise EncoderConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.d_model != self.num_heads * self.d_kv:
            raise EncoderConfigError(
                f"d_model ({self.d_model}) must equal num_heads * d_kv ({self.num_heads} * {self.d_kv})"
            )


@dataclass
class LayerWeights:
    query: np.ndarray
    key: np.ndarray
    value: np.ndarray
    output: np.ndarray
    ff_in: np.ndarray
    ff_out: np.ndarray
    attn_norm: np.ndarray
    ff_norm: np.ndarray


@dataclass
class EncoderWeights:
    config: EncoderConfig
    embedding: np.ndarray
    layers: List[LayerWeights]
    bucket_tables: List[BucketTable]
    final_norm: np.ndarray

    def validate(self) -> None:
        """Check every shape against the config and that all entries are finite."""
        cfg = self.config
        cfg.validate()
        expected = {
            "query": (cfg.d_model, cfg.d_model),
            "key": (cfg.d_model, cfg.d_model),
            "value": (cfg.d_model, cfg.d_model),
            "output": (cfg.d_model, cfg.d_model),
            "ff_in": (cfg.d_model, cfg.d_ff),
            "ff_out": (cfg.d_ff, cfg.d_model),
            "attn_norm": (cfg.d_model,),
            "ff_norm": (cfg.d_model,),
        }
        if self.embedding.shape != (cfg.vocab_size, cfg.d_model):
            raise EncoderConfigError(f"embedding shape {self.embedding.shape} does not match config")
        if len(self.layers) != cfg.num_layers:
            raise EncoderConfigError(f"expected {cfg.num_layers} layers, got {len(self.layers)}")
        if len(self.bucket_tables) != cfg.num_heads:
            raise EncoderConfigError(f"expected {cfg.num_heads} bucket tables, got {len(self.bucket_tables)}")
        if self.final_norm.shape != (cfg.d_model,):
            raise EncoderConfigError(f"final_norm shape {self.final_norm.shape} does not match config")
        for index, layer in enumerate(self.layers):
            for name, shape in expected.items():
                array = getattr(layer, name)
                if array.shape != shape:
                    raise EncoderConfigError(f"layer {index} {name} has shape {array.shape}, expected {shape}")
                if not np.all(np.isfinite(array)):
                    raise EncoderConfigError(f"layer {index} {name} has non-finite entries")
        if not np.all(np.isfinite(self.embedding)):
            raise EncoderConfigError("embedding has non-finite entries")


@dataclass
class ForwardTrace:
    p_max: np.ndarray
    entropy: np.ndarray
    hidden_states: np.ndarray
    logit_rows: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def num_rows(self) -> int:
        return int(self.p_max.size)

    @property
    def length(self) -> int:
        return int(self.p_max.shape[-1])

    def mean_stats(self) -> AttentionStats:
        return AttentionStats(
            p_max=float(self.p_max.mean()),
            entropy=float(self.entropy.mean()),
            length=self.length,
            rows=self.num_rows,
        )

    def layer_stats(self, layer: int) -> AttentionStats:
        return AttentionStats(
            p_max=float(self.p_max[layer].mean()),
            entropy=float(self.entropy[layer].mean()),
            length=self.length,
            rows=int(self.p_max[layer].size),
        )

    def rows(self) -> Iterator[LogitVector]:
        """Recorded logit rows in (layer, head, row) order."""
        if self.logit_rows is None:
            raise EmptyInputError("trace was recorded without raw logit rows")
        layers, heads, length, _ = self.logit_rows.shape
        for layer in range(layers):
            for head in range(heads):
                for row in range(length):
                    yield LogitVector(values=self.logit_rows[layer, head, row], provenance=(layer, head, row))


def _rms_norm(x: np.ndarray, gain: np.ndarray) -> np.ndarray:
    return x / np.sqrt(np.mean(x * x, axis=-1, keepdims=True) + EncoderSettings.RMS_EPS) * gain


def init_encoder(config: EncoderConfig) -> EncoderWeights:
    """
    Draw deterministic toy weights from the config's seed.

    Args:
        config (EncoderConfig): Layer, head and dimension counts plus the seed.

    Returns:
        EncoderWeights: Weights that are bit-identical for identical configs.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    d_model, d_kv, d_ff = config.d_model, config.d_kv, config.d_ff
    projection_scale = d_model ** -0.5

    layers = []
    for _ in range(config.num_layers):
        layers.append(LayerWeights(
            query=rng.normal(0.0, (d_model * d_kv) ** -0.5, size=(d_model, d_model)),
            key=rng.normal(0.0, projection_scale, size=(d_model, d_model)),
            value=rng.normal(0.0, projection_scale, size=(d_model, d_model)),
            output=rng.normal(0.0, projection_scale, size=(d_model, d_model)),
            ff_in=rng.normal(0.0, projection_scale, size=(d_model, d_ff)),
            ff_out=rng.normal(0.0, d_ff ** -0.5, size=(d_ff, d_model)),
            attn_norm=np.ones(d_model),
            ff_norm=np.ones(d_model),
        ))
    bucket_tables = [
        BucketTable(values=rng.normal(0.0, 1.0, size=EncoderSettings.NUM_BUCKETS), head_id=head)
        for head in range(config.num_heads)
    ]
    weights = EncoderWeights(
        config=config,
        embedding=rng.normal(0.0, 1.0, size=(config.vocab_size, d_model)),
        layers=layers,
        bucket_tables=bucket_tables,
        final_norm=np.ones(d_model),
    )
    logger.info(
        f"Initialised encoder R={config.num_layers} H={config.num_heads} "
        f"d_model={d_model} d_kv={d_kv} vocab={config.vocab_size} seed={config.seed}"
    )
    return weights


def zero_attention(weights: EncoderWeights) -> EncoderWeights:
    """Copy of the weights with query, key and bias zeroed: every attention row becomes uniform."""
    zeroed = copy.deepcopy(weights)
    for layer in zeroed.layers:
        layer.query[:] = 0.0
        layer.key[:] = 0.0
    zeroed.bucket_tables = [
        BucketTable(values=np.zeros(EncoderSettings.NUM_BUCKETS), head_id=table.head_id)
        for table in zeroed.bucket_tables
    ]
    return zeroed


class ToyEncoder:
    """Read-only encoder over frozen weights; forwards over different sequences may run concurrently."""

    def __init__(self, weights: EncoderWeights):
        weights.validate()
        self.weights = weights
        self.config = weights.config

    def _embed(self, tokens: Sequence[int]) -> np.ndarray:
        ids = np.asarray(tokens, dtype=np.int64)
        if ids.ndim != 1 or ids.size == 0:
            raise EmptyInputError("token sequence must be a non-empty 1-D sequence")
        if ids.min() < 0 or ids.max() >= self.config.vocab_size:
            bad = ids[(ids < 0) | (ids >= self.config.vocab_size)][0]
            raise VocabularyError(f"token id {bad} outside vocabulary of size {self.config.vocab_size}")
        return self.weights.embedding[ids]

    def _split_heads(self, x: np.ndarray) -> np.ndarray:
        length = x.shape[0]
        return x.reshape(length, self.config.num_heads, self.config.d_kv).transpose(1, 0, 2)

    def attention_logits(self, q: np.ndarray, k: np.ndarray, head: int, buckets: np.ndarray) -> np.ndarray:
        """Q.K^T plus the shared bias of one head."""
        return q[head] @ k[head].T + self.weights.bucket_tables[head].values[buckets]

    def forward(self, tokens: Sequence[int], tau: float = 1.0, record: bool = False) -> ForwardTrace:
        """
        Run the encoder at a single global softmax temperature.

        Args:
            tokens (Sequence[int]): Token ids, length L >= 1.
            tau (float): Temperature applied to every softmax.
            record (bool): Keep the raw R*H*L pre-softmax rows on the trace.

        Returns:
            ForwardTrace: Per-row statistics, optional raw rows and final hidden states.
        """
        if not tau > 0:
            raise InvalidTemperatureError(f"temperature must be > 0, got {tau}")
        x = self._embed(tokens)
        length = x.shape[0]
        cfg = self.config
        buckets = bucket_matrix(length).astype(np.int8)

        p_max = np.empty((cfg.num_layers, cfg.num_heads, length))
        entropy = np.empty((cfg.num_layers, cfg.num_heads, length))
        raw = np.empty((cfg.num_layers, cfg.num_heads, length, length)) if record else None

        for index, layer in enumerate(self.weights.layers):
            h = _rms_norm(x, layer.attn_norm)
            q = self._split_heads(h @ layer.query)
            k = self._split_heads(h @ layer.key)
            v = self._split_heads(h @ layer.value)
            context = np.empty_like(v)
            for head in range(cfg.num_heads):
                logits = self.attention_logits(q, k, head, buckets)
                if raw is not None:
                    raw[index, head] = logits
                probs = softmax_rows(logits, tau)
                p_max[index, head], entropy[index, head] = row_stats(logits, tau, probs=probs)
                context[head] = probs @ v[head]
            x = x + context.transpose(1, 0, 2).reshape(length, cfg.d_model) @ layer.output
            h = _rms_norm(x, layer.ff_norm)
            x = x + np.maximum(h @ layer.ff_in, 0.0) @ layer.ff_out

        return ForwardTrace(
            p_max=p_max,
            entropy=entropy,
            hidden_states=_rms_norm(x, self.weights.final_norm),
            logit_rows=raw,
        )

    def sequence_stats(self, tokens: Sequence[int], tau: float) -> Tuple[np.ndarray, np.ndarray]:
        """Flat per-row (p_max, entropy) for one sequence, in (layer, head, row) order."""
        trace = self.forward(tokens, tau)
        return trace.p_max.ravel(), trace.entropy.ravel()

    def layer_rows(self, tokens: Sequence[int], tau: float = 1.0, layer: int = 0) -> np.ndarray:
        """Raw pre-softmax rows of one layer, shape (H * L, L)."""
        trace = self.forward(tokens, tau, record=True)
        return trace.logit_rows[layer].reshape(-1, trace.length)

    def collect_logit_rows(self, sequences: Sequence[Sequence[int]], tau: float = 1.0) -> Iterator[LogitVector]:
        """All pre-softmax rows in (sequence, layer, head, row) order."""
        if not sequences:
            raise EmptyInputError("no sequences to collect logit rows from")
        for tokens in sequences:
            yield from self.forward(tokens, tau, record=True).rows()


def forward(weights: EncoderWeights, tokens: Sequence[int], tau: float = 1.0, record: bool = False) -> ForwardTrace:
    return ToyEncoder(weights).forward(tokens, tau, record)


def collect_logit_rows(weights: EncoderWeights, sequences: Sequence[Sequence[int]], tau: float = 1.0) -> Iterator[LogitVector]:
    return ToyEncoder(weights).collect_logit_rows(sequences, tau)
