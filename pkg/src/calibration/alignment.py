"""Empirical temperature search: align the average max probability or entropy at the
extrapolation length with its value at the training length and temperature 1."""
import json
import logging.config
import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import List, Optional, Protocol, Sequence, Tuple

import numpy as np

from src.attention.softmax_stats import row_stats
from src.configs.helpers import render_csv
from src.configs.log_config import LOGGING
from src.configs.settings import CalibrationSettings, EnvSettings, OutputSettings
from src.utils.decorators import log_duration
from src.utils.exceptions import (
    EmptyInputError,
    InvalidTemperatureError,
    PreconditionError,
    ShapeError,
    UsageError,
)

logging.config.dictConfig(LOGGING)
logger = logging.getLogger(__name__)


class AlignmentMode(Enum):
    MAX_PROB = "max"
    ENTROPY = "ent"

    @classmethod
    def parse(cls, text: str) -> "AlignmentMode":
        for mode in cls:
            if text == mode.value or text == mode.name:
                return mode
        raise UsageError(f"unknown alignment mode {text!r}, expected one of: max, ent")


class StatSource(Protocol):
    def sequence_stats(self, tokens: Sequence[int], tau: float) -> Tuple[np.ndarray, np.ndarray]:
        ...


class GaussianLogitSource:
    """
    Synthetic stand-in for an encoder: every sequence yields i.i.d. N(0, sigma^2) logit rows.

    Rows depend only on the sequence (its length and token ids) and the seed, so
    every temperature sees the same logits. With ``l_max`` set, one entry per row
    is pinned to that value, which keeps the largest logit the same at every length.
    """

    def __init__(self, sigma: float = 1.0, l_max: Optional[float] = None,
                 rows_per_sequence: Optional[int] = None, seed: int = 0):
        if sigma < 0:
            raise PreconditionError(f"sigma must be >= 0, got {sigma}")
        self.sigma = sigma
        self.l_max = l_max
        self.rows_per_sequence = rows_per_sequence
        self.seed = seed

    def logit_rows(self, tokens: Sequence[int]) -> np.ndarray:
        ids = np.asarray(tokens, dtype=np.int64)
        if ids.size == 0:
            raise EmptyInputError("token sequence is empty")
        length = ids.size
        rows = self.rows_per_sequence or length
        rng = np.random.default_rng([self.seed, length, zlib.crc32(ids.tobytes())])
        logits = rng.normal(0.0, self.sigma, size=(rows, length))
        if self.l_max is not None:
            logits[np.arange(rows), rng.integers(0, length, size=rows)] = self.l_max
        return logits

    def sequence_stats(self, tokens: Sequence[int], tau: float) -> Tuple[np.ndarray, np.ndarray]:
        return row_stats(self.logit_rows(tokens), tau)


@dataclass
class CalibrationResult:
    tau_ex: float
    mode: AlignmentMode
    target_stat: float
    achieved_stat: float
    grid: List[Tuple[float, float]]
    L_tr: int
    L_ex: int
    monotone: bool = True
    tau_refined: Optional[float] = None
    achieved_refined: Optional[float] = None
    num_sequences: Tuple[int, int] = field(default=(0, 0))

    def stat_at(self, tau: float) -> float:
        for grid_tau, stat in self.grid:
            if math.isclose(grid_tau, tau):
                return stat
        raise KeyError(tau)

    def to_dict(self) -> dict:
        document = asdict(self)
        document["mode"] = self.mode.value
        document["grid"] = [list(point) for point in self.grid]
        document["num_sequences"] = list(self.num_sequences)
        return document

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=OutputSettings.JSON_INDENT)

    @classmethod
    def from_json(cls, text: str) -> "CalibrationResult":
        document = json.loads(text)
        document["mode"] = AlignmentMode.parse(document["mode"])
        document["grid"] = [tuple(point) for point in document["grid"]]
        document["num_sequences"] = tuple(document.get("num_sequences", (0, 0)))
        return cls(**document)

    def grid_csv(self) -> str:
        return render_csv(["tau", "stat"], self.grid)


def _select(stats: Tuple[np.ndarray, np.ndarray], mode: AlignmentMode) -> np.ndarray:
    p_max, entropy = stats
    return p_max if mode is AlignmentMode.MAX_PROB else entropy


def find_s(source: StatSource, sequences: Sequence[Sequence[int]], tau: float, mode: AlignmentMode) -> float:
    """
    Average statistic over every softmax row of every sequence at one temperature.

    Args:
        source (StatSource): Encoder (or synthetic source) run with global temperature tau.
        sequences: Token sequences, pooled.
        tau (float): Temperature.
        mode (AlignmentMode): Max probability or entropy.

    Returns:
        float: Arithmetic mean over all rows.
    """
    if not tau > 0:
        raise InvalidTemperatureError(f"temperature must be > 0, got {tau}")
    if not sequences:
        raise EmptyInputError("find_s needs at least one sequence")
    values = [_select(source.sequence_stats(tokens, tau), mode) for tokens in sequences]
    return float(np.concatenate(values).mean())


def _common_length(sequences: Sequence[Sequence[int]], label: str) -> int:
    if not sequences:
        raise EmptyInputError(f"no {label} sequences")
    lengths = {len(tokens) for tokens in sequences}
    if len(lengths) != 1:
        raise ShapeError(f"{label} sequences have mixed lengths {sorted(lengths)}")
    return lengths.pop()


def is_monotone(grid: Sequence[Tuple[float, float]], mode: AlignmentMode,
                tolerance: float = CalibrationSettings.MONOTONE_TOLERANCE) -> bool:
    """Entropy must not decrease as tau grows; max probability must not increase."""
    ordered = [stat for _, stat in sorted(grid)]
    steps = np.diff(ordered)
    if mode is AlignmentMode.ENTROPY:
        return bool(np.all(steps >= -tolerance))
    return bool(np.all(steps <= tolerance))


def _best_index(taus: Sequence[float], stats: Sequence[float], target: float) -> int:
    # argmin |S_ex(tau) - target|, ties toward the larger tau
    return min(range(len(taus)), key=lambda i: (abs(stats[i] - target), -taus[i]))


@log_duration
def calibrate(source: StatSource, short_seqs: Sequence[Sequence[int]], long_seqs: Sequence[Sequence[int]],
              mode: AlignmentMode, grid: Sequence[float] = CalibrationSettings.TAU_GRID,
              refine: bool = False, workers: int = EnvSettings.WORKERS) -> CalibrationResult:
    """
    Grid-search the extrapolation temperature.

    Args:
        source (StatSource): Encoder with frozen weights.
        short_seqs: Independent sequences of the training length L_tr.
        long_seqs: Sequences of the extrapolation length L_ex > L_tr.
        mode (AlignmentMode): Statistic to align.
        grid: Candidate temperatures, default 1.00, 0.95, ..., 0.50.
        refine (bool): Bisect once between the winner and its bracketing neighbour.
        workers (int): Threads evaluating grid points; the result does not depend on it.

    Returns:
        CalibrationResult: The chosen grid temperature and the evaluated grid.
    """
    L_tr = _common_length(short_seqs, "short")
    L_ex = _common_length(long_seqs, "long")
    if L_ex <= L_tr:
        raise PreconditionError(f"extrapolation length L_ex={L_ex} must exceed training length L_tr={L_tr}")
    taus = [float(tau) for tau in grid]
    if not taus or any(not tau > 0 for tau in taus):
        raise InvalidTemperatureError(f"grid temperatures must be > 0, got {taus}")

    target = find_s(source, short_seqs, 1.0, mode)
    logger.info(f"Target {mode.value} statistic at L_tr={L_tr}, tau=1: {target:.6g}")

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        stats = list(pool.map(lambda tau: find_s(source, long_seqs, tau, mode), taus))
    for tau, stat in zip(taus, stats):
        logger.info(f"L_ex={L_ex} tau={tau:.2f} {mode.value}={stat:.6g}")

    grid_points = list(zip(taus, stats))
    monotone = is_monotone(grid_points, mode)
    if not monotone:
        logger.warning(f"{mode.value} statistic is not monotone in tau on the grid: {grid_points}")

    best = _best_index(taus, stats, target)
    result = CalibrationResult(
        tau_ex=taus[best],
        mode=mode,
        target_stat=target,
        achieved_stat=stats[best],
        grid=grid_points,
        L_tr=L_tr,
        L_ex=L_ex,
        monotone=monotone,
        num_sequences=(len(short_seqs), len(long_seqs)),
    )
    if refine:
        _refine(source, long_seqs, result, taus, stats, best)
    logger.info(f"Chosen tau_ex={result.tau_ex:.2f} (achieved {result.achieved_stat:.6g}, target {target:.6g})")
    return result


def _refine(source: StatSource, long_seqs, result: CalibrationResult,
            taus: List[float], stats: List[float], best: int) -> None:
    result.tau_refined, result.achieved_refined = result.tau_ex, result.achieved_stat
    for neighbour in (best - 1, best + 1):
        if not 0 <= neighbour < len(taus):
            continue
        low, high = sorted((stats[best], stats[neighbour]))
        if low <= result.target_stat <= high:
            midpoint = (taus[best] + taus[neighbour]) / 2
            stat = find_s(source, long_seqs, midpoint, result.mode)
            if abs(stat - result.target_stat) < abs(result.achieved_stat - result.target_stat):
                result.tau_refined, result.achieved_refined = midpoint, stat
            logger.info(f"Refinement at tau={midpoint:.3f}: {stat:.6g}")
            return


def log_baseline_tau(L_tr: int, L_ex: int) -> float:
    """Length-only temperature ln(L_tr) / ln(L_ex)."""
    if L_tr < 2 or L_ex < 2:
        raise PreconditionError(f"log baseline needs lengths >= 2, got L_tr={L_tr}, L_ex={L_ex}")
    return math.log(L_tr) / math.log(L_ex)
