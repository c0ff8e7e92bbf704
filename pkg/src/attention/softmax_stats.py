"""Temperature-scaled softmax and the two sharpness statistics (max probability, entropy in nats)."""
import logging.config
from dataclasses import dataclass, field
from typing import Iterable, Optional, Tuple, Union

import numpy as np

from src.configs.log_config import LOGGING
from src.utils.decorators import positive_temperature
from src.utils.exceptions import EmptyInputError, ShapeError

logging.config.dictConfig(LOGGING)
logger = logging.getLogger(__name__)

SUM_TOLERANCE = 1e-9

Provenance = Union[Tuple[int, int, int], str]


@dataclass
class LogitVector:
    values: np.ndarray
    provenance: Provenance = "synthetic"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ShapeError(f"logit vector must be 1-D, got shape {self.values.shape}")
        if self.values.size == 0:
            raise EmptyInputError("logit vector is empty")
        if not np.all(np.isfinite(self.values)):
            raise ShapeError("logit vector has non-finite entries")

    def __len__(self) -> int:
        return self.values.size


@dataclass
class Distribution:
    probs: np.ndarray
    temperature: float

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if np.any(self.probs < 0) or abs(self.probs.sum() - 1.0) > SUM_TOLERANCE:
            raise ShapeError("probabilities must be non-negative and sum to 1")


@dataclass
class AttentionStats:
    p_max: float
    entropy: float
    length: int
    rows: int = field(default=1)

    @classmethod
    def mean(cls, stats: Iterable["AttentionStats"]) -> "AttentionStats":
        """Row-weighted average of many statistics records of a common length."""
        stats = list(stats)
        if not stats:
            raise EmptyInputError("no statistics to average")
        total = sum(item.rows for item in stats)
        return cls(
            p_max=sum(item.p_max * item.rows for item in stats) / total,
            entropy=sum(item.entropy * item.rows for item in stats) / total,
            length=stats[0].length,
            rows=total,
        )


def _as_logits(l: Union[LogitVector, np.ndarray, Iterable[float]]) -> np.ndarray:
    if isinstance(l, LogitVector):
        return l.values
    values = np.asarray(l, dtype=np.float64)
    if values.size == 0:
        raise EmptyInputError("logit vector is empty")
    return values


@positive_temperature
def softmax_rows(rows: np.ndarray, tau: float) -> np.ndarray:
    """Row-wise softmax of a 2-D block at temperature tau, max-subtracted."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.size == 0:
        raise EmptyInputError("no logits to softmax")
    scaled = rows / tau
    scaled = scaled - scaled.max(axis=-1, keepdims=True)
    weights = np.exp(scaled)
    return weights / weights.sum(axis=-1, keepdims=True)


@positive_temperature
def softmax_tau(l: Union[LogitVector, np.ndarray], tau: float) -> Distribution:
    """exp(l_i / tau) / sum_j exp(l_j / tau)."""
    return Distribution(probs=softmax_rows(_as_logits(l), tau), temperature=tau)


def _entropy(probs: np.ndarray) -> np.ndarray:
    # 0 * ln 0 := 0
    safe = np.where(probs > 0, probs, 1.0)
    return -np.sum(probs * np.log(safe), axis=-1)


def stats(d: Distribution) -> AttentionStats:
    return AttentionStats(
        p_max=float(d.probs.max()),
        entropy=float(_entropy(d.probs)),
        length=d.probs.size,
    )


@positive_temperature
def row_stats(rows: np.ndarray, tau: float, probs: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-row max probability and entropy of a block of logit rows.

    Args:
        rows (np.ndarray): Logits of shape (..., L).
        tau (float): Softmax temperature.
        probs (np.ndarray): Already softmaxed rows, skips recomputation when given.

    Returns:
        Tuple[np.ndarray, np.ndarray]: p_max and entropy, each of shape rows.shape[:-1].
    """
    if probs is None:
        probs = softmax_rows(rows, tau)
    return probs.max(axis=-1), _entropy(probs)


def zero_mean(l: Union[LogitVector, np.ndarray]) -> LogitVector:
    provenance = l.provenance if isinstance(l, LogitVector) else "synthetic"
    values = _as_logits(l)
    return LogitVector(values=values - values.mean(), provenance=provenance)
