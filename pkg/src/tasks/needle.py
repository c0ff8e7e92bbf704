"""Needle model of retrieval attention: one logit with advantage g among L Gaussian junk logits.

The closed form replaces the junk part of the softmax denominator by its
Gaussian expectation, L * exp(sigma^2 / (2 tau^2)).
"""
import logging.config
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Sequence

import numpy as np
from scipy.special import expit

from src.analytic.gaussian import solve_tau_entropy
from src.attention.softmax_stats import softmax_rows
from src.configs.helpers import render_csv
from src.configs.log_config import LOGGING
from src.configs.settings import CalibrationSettings, OracleSettings, TaskSettings
from src.utils.exceptions import EmptyInputError, InvalidTemperatureError, PreconditionError

logging.config.dictConfig(LOGGING)
logger = logging.getLogger(__name__)


class NeedleMode(Enum):
    CLOSED_FORM = "closed_form"
    MONTE_CARLO = "monte_carlo"


class TauPolicy(Enum):
    FIXED_1 = "fixed_1"
    PROP2_ALIGNED = "prop2_aligned"


@dataclass
class NeedleCurve:
    gap: float
    junk_sigma: float
    lengths: List[int]
    policies: List[TauPolicy]
    temperatures: np.ndarray
    p_needle: np.ndarray
    achievable: List[bool] = field(default_factory=list)

    def curve(self, policy: TauPolicy) -> np.ndarray:
        return self.p_needle[self.policies.index(policy)]

    def to_csv(self) -> str:
        rows = [
            (length, float(self.temperatures[row, column]), float(self.p_needle[row, column]), policy.value)
            for row, policy in enumerate(self.policies)
            for column, length in enumerate(self.lengths)
        ]
        return render_csv(["L", "tau", "p_needle", "policy"], rows)


def _closed_form(g: float, sigma: float, length: int, tau: float) -> float:
    # logistic in log space; stays finite for any tau > 0
    return float(expit(g / tau - math.log(length) - sigma ** 2 / (2 * tau ** 2)))


def _monte_carlo(g: float, sigma: float, length: int, tau: float, replicates: int, seed: int) -> float:
    chunk = OracleSettings.CHUNK_ROWS
    seeds = np.random.SeedSequence(seed).spawn(math.ceil(replicates / chunk))
    total = 0.0
    for index, seed_seq in enumerate(seeds):
        rows = min(chunk, replicates - index * chunk)
        logits = np.empty((rows, length + 1))
        logits[:, :length] = np.random.default_rng(seed_seq).normal(0.0, sigma, size=(rows, length))
        logits[:, length] = g
        total += softmax_rows(logits, tau)[:, length].sum()
    return total / replicates


def needle_pmax(g: float, sigma: float, length: int, tau: float,
                mode: NeedleMode = NeedleMode.CLOSED_FORM,
                replicates: int = TaskSettings.NEEDLE_REPLICATES, seed: int = 0) -> float:
    """
    Attention probability on the needle.

    Args:
        g (float): Logit advantage of the needle.
        sigma (float): Junk logit standard deviation.
        length (int): Number of junk logits L.
        tau (float): Temperature.
        mode (NeedleMode): Closed form or Monte-Carlo average over replicates.

    Returns:
        float: Needle probability in (0, 1).
    """
    if length < 1:
        raise PreconditionError(f"length must be >= 1, got {length}")
    if not tau > 0:
        raise InvalidTemperatureError(f"temperature must be > 0, got {tau}")
    if sigma < 0:
        raise PreconditionError(f"sigma must be >= 0, got {sigma}")
    if mode is NeedleMode.CLOSED_FORM:
        return _closed_form(g, sigma, length, tau)
    return _monte_carlo(g, sigma, length, tau, replicates, seed)


def dispersed_attention_demo(g: float, sigma: float, lengths: Sequence[int],
                             policies: Sequence[TauPolicy] = (TauPolicy.FIXED_1, TauPolicy.PROP2_ALIGNED),
                             mode: NeedleMode = NeedleMode.CLOSED_FORM) -> NeedleCurve:
    """Needle probability across lengths under each temperature policy; lengths[0] is L_tr."""
    if not lengths:
        raise EmptyInputError("demo needs at least one length")
    L_tr = lengths[0]
    if any(length < L_tr for length in lengths):
        raise PreconditionError(f"lengths must start at the training length {L_tr}")
    if TauPolicy.PROP2_ALIGNED in policies and not sigma > 0:
        raise PreconditionError("entropy-aligned temperatures need sigma > 0")

    temperatures = np.ones((len(policies), len(lengths)))
    p_needle = np.empty((len(policies), len(lengths)))
    for row, policy in enumerate(policies):
        for column, length in enumerate(lengths):
            if policy is TauPolicy.PROP2_ALIGNED:
                temperatures[row, column] = solve_tau_entropy(L_tr, length, sigma, sigma)
            p_needle[row, column] = needle_pmax(g, sigma, length, temperatures[row, column], mode)

    reference = needle_pmax(g, sigma, L_tr, 1.0, mode)
    sharpened = [tau for tau in CalibrationSettings.TAU_GRID if tau < 1.0]
    achievable = [
        any(needle_pmax(g, sigma, length, tau, mode) >= reference for tau in sharpened) or length == L_tr
        for length in lengths
    ]
    for length, ok in zip(lengths, achievable):
        if not ok:
            logger.info(f"L={length}: no grid temperature restores the L_tr={L_tr} needle probability {reference:.6g}")
    return NeedleCurve(
        gap=g,
        junk_sigma=sigma,
        lengths=list(lengths),
        policies=list(policies),
        temperatures=temperatures,
        p_needle=p_needle,
        achievable=achievable,
    )
