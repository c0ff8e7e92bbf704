"""Gaussian model of the average logit vector and the closed-form temperature solvers.

Logit entries are modelled as N(0, sigma^2) after zero-meaning. The softmax
denominator is then about L * exp(sigma^2 / (2 tau^2)), which gives

    P_max ~ exp(l_max / tau) / (L * exp(sigma^2 / (2 tau^2)))
    H     ~ ln L - sigma^2 / (2 tau^2)

Aligning P_max between a training length (tau = 1) and an extrapolation length
under a shared l_max gives a quadratic in tau; aligning H gives a closed form.
"""
import json
import logging.config
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Union

import numpy as np

from src.attention.softmax_stats import LogitVector, zero_mean
from src.configs.log_config import LOGGING
from src.configs.settings import OutputSettings
from src.utils.exceptions import (
    DegenerateCoefficientError,
    EmptyInputError,
    InvalidTemperatureError,
    NoRealRootError,
    PreconditionError,
    ShapeError,
    ZeroSigmaError,
)

logging.config.dictConfig(LOGGING)
logger = logging.getLogger(__name__)

ZERO_SIGMA = 1e-12


@dataclass
class GaussianFit:
    sigma: float
    l_max: float
    length: int
    layer: str = "layer0"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ZeroSigmaError(f"sigma must be > 0, got {self.sigma}")
        if not math.isfinite(self.l_max):
            raise ShapeError(f"l_max must be finite, got {self.l_max}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=OutputSettings.JSON_INDENT)

    @classmethod
    def from_json(cls, text: str) -> "GaussianFit":
        return cls(**json.loads(text))


def _check_tau(tau: float) -> None:
    if not tau > 0:
        raise InvalidTemperatureError(f"temperature must be > 0, got {tau}")


def average_logit_vector(rows: Union[np.ndarray, Iterable[Union[LogitVector, np.ndarray]]]) -> LogitVector:
    """
    Sort every row ascending, average elementwise, then zero-mean the result.

    Args:
        rows: Logit rows of a common length L, as a 2-D array or an iterable of vectors.

    Returns:
        LogitVector: The zero-meaned average logit vector of length L.
    """
    if isinstance(rows, np.ndarray) and rows.ndim == 2:
        block = rows
    else:
        vectors = [row.values if isinstance(row, LogitVector) else np.asarray(row, dtype=np.float64) for row in rows]
        if not vectors:
            raise EmptyInputError("no logit rows to average")
        lengths = {vector.size for vector in vectors}
        if len(lengths) != 1:
            raise ShapeError(f"logit rows have mixed lengths {sorted(lengths)}")
        block = np.vstack(vectors)
    if block.shape[0] == 0:
        raise EmptyInputError("no logit rows to average")
    return zero_mean(np.sort(block, axis=1).mean(axis=0))


def fit_gaussian(avg: Union[LogitVector, np.ndarray], layer: str = "layer0") -> GaussianFit:
    """Population standard deviation and largest entry of the average logit vector."""
    values = avg.values if isinstance(avg, LogitVector) else np.asarray(avg, dtype=np.float64)
    if values.size < 2:
        raise PreconditionError(f"need at least 2 entries to fit, got {values.size}")
    centred = values - values.mean()
    sigma = float(np.sqrt(np.mean(centred ** 2)))
    if sigma <= ZERO_SIGMA:
        raise ZeroSigmaError("average logit vector is constant")
    return GaussianFit(sigma=sigma, l_max=float(centred.max()), length=int(values.size), layer=layer)


def approx_pmax(L: int, sigma: float, l_max: float, tau: float) -> float:
    _check_tau(tau)
    if L < 1 or sigma < 0:
        raise PreconditionError(f"need L >= 1 and sigma >= 0, got L={L}, sigma={sigma}")
    try:
        value = math.exp(l_max / tau - sigma ** 2 / (2 * tau ** 2)) / L
    except OverflowError:
        value = math.inf
    if value > 1.0:
        logger.warning(f"P_max approximation out of range: {value:.6g} > 1 (L={L}, sigma={sigma}, tau={tau})")
    return value


def approx_entropy(L: int, sigma: float, tau: float) -> float:
    _check_tau(tau)
    if L < 1 or sigma < 0:
        raise PreconditionError(f"need L >= 1 and sigma >= 0, got L={L}, sigma={sigma}")
    value = math.log(L) - sigma ** 2 / (2 * tau ** 2)
    if value < 0:
        logger.warning(f"entropy approximation is negative ({value:.6g}); outside the Gaussian model's range")
    return value


def maxprob_coefficients(L_tr: int, L_ex: int, p_max_tr: float, sigma_tr: float, sigma_ex: float):
    """(A, B, C) of A tau^2 - B tau + C = 0."""
    log_p = math.log(p_max_tr)
    return (
        math.log(L_ex) + log_p,
        math.log(L_tr) + log_p + sigma_tr ** 2 / 2,
        sigma_ex ** 2 / 2,
    )


def solve_tau_maxprob(L_tr: int, L_ex: int, p_max_tr: float, sigma_tr: float, sigma_ex: float) -> float:
    """
    Larger root of the max-probability alignment quadratic.

    Args:
        L_tr (int): Training length.
        L_ex (int): Extrapolation length, >= L_tr.
        p_max_tr (float): Average max probability at L_tr, tau = 1.
        sigma_tr (float): Gaussian sigma at L_tr.
        sigma_ex (float): Gaussian sigma at L_ex.

    Returns:
        float: The larger real root. When C/A > 1 that root may exceed 1.
    """
    if not L_ex >= L_tr >= 2:
        raise PreconditionError(f"need L_ex >= L_tr >= 2, got L_tr={L_tr}, L_ex={L_ex}")
    if not 0 < p_max_tr <= 1:
        raise PreconditionError(f"p_max_tr must be in (0, 1], got {p_max_tr}")
    if not (sigma_tr > 0 and sigma_ex > 0):
        raise PreconditionError(f"sigmas must be > 0, got {sigma_tr}, {sigma_ex}")
    a, b, c = maxprob_coefficients(L_tr, L_ex, p_max_tr, sigma_tr, sigma_ex)
    if a <= 0:
        raise DegenerateCoefficientError(f"leading coefficient A={a:.6g} is not positive")
    discriminant = b * b - 4 * a * c
    if discriminant < 0:
        raise NoRealRootError(discriminant)
    return (b + math.sqrt(discriminant)) / (2 * a)


def solve_tau_entropy(L_tr: int, L_ex: int, sigma_tr: float, sigma_ex: float) -> float:
    if not L_ex >= L_tr >= 1:
        raise PreconditionError(f"need L_ex >= L_tr >= 1, got L_tr={L_tr}, L_ex={L_ex}")
    if not (sigma_tr > 0 and sigma_ex > 0):
        raise PreconditionError(f"sigmas must be > 0, got {sigma_tr}, {sigma_ex}")
    return sigma_ex / math.sqrt(sigma_tr ** 2 + 2 * math.log(L_ex / L_tr))


def lmax_from_pmax(L_tr: int, p_max_tr: float, sigma_tr: float) -> float:
    """Largest logit implied at the training length: ln(P_max * L * e^(sigma^2 / 2))."""
    if not 0 < p_max_tr <= 1 or L_tr < 1:
        raise PreconditionError(f"need 0 < p_max_tr <= 1 and L_tr >= 1, got {p_max_tr}, {L_tr}")
    return math.log(p_max_tr * L_tr) + sigma_tr ** 2 / 2


def predict_pmax_ex(L_tr: int, L_ex: int, p_max_tr: float, sigma_tr: float, sigma_ex: float, tau: float) -> float:
    """Max probability at L_ex and tau when l_max is carried over from the training length."""
    return approx_pmax(L_ex, sigma_ex, lmax_from_pmax(L_tr, p_max_tr, sigma_tr), tau)


def lmax_drift(fit_tr: GaussianFit, fit_ex: GaussianFit) -> float:
    """Relative change of l_max between two lengths; near 0 when the shared-l_max assumption holds."""
    if fit_tr.l_max == 0:
        raise ZeroSigmaError("training-length l_max is 0; relative drift undefined")
    return (fit_ex.l_max - fit_tr.l_max) / abs(fit_tr.l_max)


class SortedLogitAccumulator:
    """Running sum of individually sorted rows; average() equals average_logit_vector over everything added."""

    def __init__(self):
        self.total = None
        self.count = 0

    def add(self, rows: np.ndarray) -> None:
        block = np.sort(np.atleast_2d(np.asarray(rows, dtype=np.float64)), axis=1)
        if self.total is None:
            self.total = np.zeros(block.shape[1])
        elif block.shape[1] != self.total.size:
            raise ShapeError(f"rows of length {block.shape[1]} added to an accumulator of length {self.total.size}")
        self.total += block.sum(axis=0)
        self.count += block.shape[0]

    def average(self) -> LogitVector:
        if not self.count:
            raise EmptyInputError("no logit rows to average")
        return zero_mean(self.total / self.count)
