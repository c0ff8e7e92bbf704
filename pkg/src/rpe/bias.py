"""T5 relative position bias: the bucket-index function and per-head bias matrices.

The bucket function follows the four-case formula exactly: offsets 0..7 and
-7..-1 map one-to-one onto buckets 0..7 and 17..23, longer offsets map
logarithmically up to distance 128 and are clamped to 15 (positive) or 31
(negative). Bucket 16 is never produced by this formula; reference
implementations that partition the 32 buckets as 16 + 16 differ here and are
deliberately not followed.
"""
import json
import logging.config
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence

import numpy as np

from src.configs.helpers import render_csv, write_atomic
from src.configs.log_config import LOGGING
from src.configs.settings import EncoderSettings, OutputSettings
from src.utils.exceptions import EmptyInputError, PreconditionError, ShapeError

logging.config.dictConfig(LOGGING)
logger = logging.getLogger(__name__)

MAX_EXACT = 8
MAX_DISTANCE = 128
LOG_BUCKETS = 8
NEGATIVE_OFFSET = 16
POSITIVE_CAP = 15
NEGATIVE_CAP = 31
# (m-n)/8 on an exact power of 2 lands on an integer step; snap float noise
# there to the hand-evaluated value.
FLOOR_SNAP = 1e-9

JSON_KEY = "relative_attention_bias"


@dataclass
class BucketTable:
    values: np.ndarray
    head_id: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (EncoderSettings.NUM_BUCKETS,):
            raise ShapeError(
                f"bucket table needs exactly {EncoderSettings.NUM_BUCKETS} entries, got shape {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ShapeError(f"bucket table for head {self.head_id} has non-finite entries")
        if self.head_id < 0:
            raise PreconditionError(f"head_id must be >= 0, got {self.head_id}")


@dataclass
class BiasMatrix:
    entries: np.ndarray
    length: int


def _log_steps(distance: int) -> int:
    ratio = math.log(distance / MAX_EXACT) / math.log(MAX_DISTANCE / MAX_EXACT) * LOG_BUCKETS
    return math.floor(ratio + FLOOR_SNAP)


def bucket_index(m: int, n: int) -> int:
    """Bucket of the bias added at query position m, key position n."""
    if m < 0 or n < 0:
        raise PreconditionError(f"positions must be >= 0, got m={m}, n={n}")
    offset = m - n
    if 0 <= offset < MAX_EXACT:
        return offset
    if -MAX_EXACT < offset < 0:
        return n - m + NEGATIVE_OFFSET
    if offset >= MAX_EXACT:
        return min(POSITIVE_CAP, MAX_EXACT + _log_steps(offset))
    return min(NEGATIVE_CAP, 24 + _log_steps(-offset))


def offset_buckets(length: int) -> np.ndarray:
    """
    Bucket index of every offset -(length-1)..(length-1).

    Args:
        length (int): Sequence length L.

    Returns:
        np.ndarray: Integer array of size 2L-1; entry ``offset + L - 1`` holds the bucket.
    """
    if length < 1:
        raise EmptyInputError("length must be >= 1")
    offsets = np.arange(-(length - 1), length, dtype=np.int64)
    distance = np.abs(offsets)
    far = np.maximum(distance, MAX_EXACT).astype(np.float64)
    steps = np.floor(
        np.log(far / MAX_EXACT) / np.log(MAX_DISTANCE / MAX_EXACT) * LOG_BUCKETS + FLOOR_SNAP
    ).astype(np.int64)

    buckets = np.empty_like(offsets)
    near_pos = (offsets >= 0) & (offsets < MAX_EXACT)
    near_neg = (offsets < 0) & (offsets > -MAX_EXACT)
    far_pos = offsets >= MAX_EXACT
    far_neg = offsets <= -MAX_EXACT
    buckets[near_pos] = offsets[near_pos]
    buckets[near_neg] = -offsets[near_neg] + NEGATIVE_OFFSET
    buckets[far_pos] = np.minimum(POSITIVE_CAP, MAX_EXACT + steps[far_pos])
    buckets[far_neg] = np.minimum(NEGATIVE_CAP, 24 + steps[far_neg])
    return buckets


def bucket_matrix(length: int) -> np.ndarray:
    """L x L matrix of bucket indices."""
    positions = np.arange(length)
    return offset_buckets(length)[positions[:, None] - positions[None, :] + length - 1]


def build_bias_matrix(table: BucketTable, length: int) -> BiasMatrix:
    """Dense bias matrix with entries[m][n] = table.values[bucket_index(m, n)]."""
    if length < 1:
        raise EmptyInputError("cannot build a bias matrix for length 0")
    return BiasMatrix(entries=table.values[bucket_matrix(length)], length=length)


def bias_profile(table: BucketTable, m: int, length: int) -> np.ndarray:
    """Row m of the bias matrix: the bias seen by query m against every key n."""
    if not 0 <= m < length:
        raise IndexError(f"query position {m} outside [0, {length})")
    keys = np.arange(length)
    return table.values[offset_buckets(length)[m - keys + length - 1]]


def bias_profile_csv(profile: Sequence[float]) -> str:
    return render_csv(["n", "bias"], ((n, float(bias)) for n, bias in enumerate(profile)))


def load_bucket_tables(path: Path) -> List[BucketTable]:
    """Load per-head bucket tables from {"relative_attention_bias": [[32 numbers], ...]}."""
    path = Path(path)
    with path.open('r', encoding='utf-8') as file:
        document = json.load(file)
    try:
        heads = document[JSON_KEY]
    except (KeyError, TypeError) as e:
        raise ShapeError(f"{path} has no '{JSON_KEY}' array") from e
    tables = [BucketTable(values=values, head_id=head) for head, values in enumerate(heads)]
    logger.info(f"Loaded {len(tables)} bucket tables from {path}")
    return tables


def dump_bucket_tables(tables: Sequence[BucketTable]) -> dict:
    ordered = sorted(tables, key=lambda table: table.head_id)
    return {JSON_KEY: [table.values.tolist() for table in ordered]}


def save_bucket_tables(tables: Sequence[BucketTable], path: Path) -> Path:
    return write_atomic(Path(path), json.dumps(dump_bucket_tables(tables), indent=OutputSettings.JSON_INDENT))
