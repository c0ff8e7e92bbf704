"""Monte-Carlo oracles for the Gaussian approximations, and the QQ normality check."""
import logging.config
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
from scipy import stats as scipy_stats

from src.analytic.gaussian import approx_entropy
from src.attention.softmax_stats import row_stats
from src.configs.helpers import render_csv
from src.configs.log_config import LOGGING
from src.configs.settings import EnvSettings, OracleSettings
from src.utils.decorators import log_duration
from src.utils.exceptions import DegenerateSamplesError, InvalidTemperatureError, PreconditionError

logging.config.dictConfig(LOGGING)
logger = logging.getLogger(__name__)

MIN_QQ_SAMPLES = 20


@dataclass
class ExpectationReport:
    sigma: float
    tau: float
    n_samples: int
    mgf_empirical: float
    mgf_closed: float
    lel_empirical: float
    lel_closed: float
    warnings: List[str] = field(default_factory=list)

    @property
    def mgf_rel_error(self) -> float:
        return abs(self.mgf_empirical - self.mgf_closed) / self.mgf_closed

    @property
    def lel_rel_error(self) -> float:
        return abs(self.lel_empirical - self.lel_closed) / self.lel_closed


@dataclass
class FidelityReport:
    length: int
    sigma: float
    tau: float
    n_rows: int
    entropy_exact: float
    entropy_approx: float
    pmax_exact: float
    pmax_approx: float

    @property
    def entropy_abs_error(self) -> float:
        return abs(self.entropy_exact - self.entropy_approx)

    @property
    def pmax_rel_error(self) -> float:
        return abs(self.pmax_exact - self.pmax_approx) / self.pmax_exact


@dataclass
class QQReport:
    points: List[Tuple[float, float]]
    linearity: float

    def to_csv(self) -> str:
        return render_csv(["theoretical", "empirical"], self.points)


def _low_sample_warning(n_samples: int) -> List[str]:
    if n_samples >= OracleSettings.MIN_GUARANTEED_SAMPLES:
        return []
    message = (f"n_samples={n_samples} is below {OracleSettings.MIN_GUARANTEED_SAMPLES}; "
               f"tolerances are not guaranteed")
    logger.warning(message)
    return [message]


@log_duration
def mc_oracle_expectations(sigma: float, tau: float, n_samples: int, seed: int = 0) -> ExpectationReport:
    """
    Empirical E[exp(l / tau)] and E[l exp(l)] for l ~ N(0, sigma^2) next to their closed forms.

    Args:
        sigma (float): Standard deviation, > 0.
        tau (float): Temperature, > 0.
        n_samples (int): Number of draws.
        seed (int): Random seed.

    Returns:
        ExpectationReport: Both pairs with relative errors.
    """
    if not sigma > 0:
        raise PreconditionError(f"sigma must be > 0, got {sigma}")
    if not tau > 0:
        raise InvalidTemperatureError(f"temperature must be > 0, got {tau}")
    warnings = _low_sample_warning(n_samples)
    samples = np.random.default_rng(seed).normal(0.0, sigma, size=n_samples)
    return ExpectationReport(
        sigma=sigma,
        tau=tau,
        n_samples=n_samples,
        mgf_empirical=float(np.mean(np.exp(samples / tau))),
        mgf_closed=float(np.exp(sigma ** 2 / (2 * tau ** 2))),
        lel_empirical=float(np.mean(samples * np.exp(samples))),
        lel_closed=float(sigma ** 2 * np.exp(sigma ** 2 / 2)),
        warnings=warnings,
    )


def _chunk_sums(seed_seq: np.random.SeedSequence, rows: int, length: int, sigma: float,
                taus: Sequence[float]) -> np.ndarray:
    logits = np.random.default_rng(seed_seq).normal(0.0, sigma, size=(rows, length))
    logits -= logits.mean(axis=1, keepdims=True)
    l_max = logits.max(axis=1)
    sums = np.empty((len(taus), 3))
    for index, tau in enumerate(taus):
        p_max, entropy = row_stats(logits, tau)
        approx = np.exp(l_max / tau - sigma ** 2 / (2 * tau ** 2)) / length
        sums[index] = (entropy.sum(), p_max.sum(), approx.sum())
    return sums


@log_duration
def mc_exact_stats(length: int, sigma: float, taus: Sequence[float], n_rows: int,
                   seed: int = 0, workers: int = EnvSettings.WORKERS) -> List[FidelityReport]:
    """
    Monte-Carlo mean entropy and max probability of softmaxed N(0, sigma^2) rows.

    Each chunk of rows draws from its own spawned seed and chunk sums are added in
    chunk order, so the result does not depend on the number of workers.
    The approximate P_max uses each row's own largest zero-meaned entry.
    """
    if any(not tau > 0 for tau in taus):
        raise InvalidTemperatureError(f"temperatures must be > 0, got {list(taus)}")
    if length < 1 or n_rows < 1:
        raise PreconditionError(f"need length >= 1 and n_rows >= 1, got {length}, {n_rows}")
    chunk = OracleSettings.CHUNK_ROWS
    sizes = [min(chunk, n_rows - start) for start in range(0, n_rows, chunk)]
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        parts = list(pool.map(lambda job: _chunk_sums(job[0], job[1], length, sigma, taus), zip(seeds, sizes)))
    totals = np.zeros((len(taus), 3))
    for part in parts:
        totals += part
    means = totals / n_rows
    return [
        FidelityReport(
            length=length,
            sigma=sigma,
            tau=tau,
            n_rows=n_rows,
            entropy_exact=float(means[index, 0]),
            entropy_approx=approx_entropy(length, sigma, tau),
            pmax_exact=float(means[index, 1]),
            pmax_approx=float(means[index, 2]),
        )
        for index, tau in enumerate(taus)
    ]


def qq_check(samples: Sequence[float]) -> QQReport:
    """
    Standardized sample quantiles against standard-normal quantiles at (i - 0.5) / n.

    Args:
        samples: At least 20 real values.

    Returns:
        QQReport: Sorted (theoretical, empirical) points and their Pearson correlation.
    """
    values = np.asarray(samples, dtype=np.float64).ravel()
    if values.size < MIN_QQ_SAMPLES:
        raise DegenerateSamplesError(f"QQ check needs at least {MIN_QQ_SAMPLES} samples, got {values.size}")
    spread = values.std()
    if spread == 0 or not np.isfinite(spread):
        raise DegenerateSamplesError("QQ check on constant samples")
    empirical = np.sort((values - values.mean()) / spread)
    positions = (np.arange(1, values.size + 1) - 0.5) / values.size
    theoretical = scipy_stats.norm.ppf(positions)
    linearity = float(np.clip(scipy_stats.pearsonr(theoretical, empirical)[0], -1.0, 1.0))
    return QQReport(points=list(zip(theoretical.tolist(), empirical.tolist())), linearity=linearity)
