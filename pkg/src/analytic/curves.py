import csv
import io
import logging.config
from dataclasses import dataclass
from typing import Callable, List, Mapping, Optional, Sequence

from src.analytic.gaussian import GaussianFit, solve_tau_entropy, solve_tau_maxprob
from src.calibration.alignment import log_baseline_tau
from src.configs.helpers import render_csv
from src.configs.log_config import LOGGING
from src.utils.exceptions import AttentionAlignError, EmptyInputError

logging.config.dictConfig(LOGGING)
logger = logging.getLogger(__name__)

CURVE_COLUMNS = ["L_ex", "tau_prop1", "tau_prop2", "tau_log"]


@dataclass
class TemperatureRow:
    L_ex: int
    tau_prop1: Optional[float]
    tau_prop2: Optional[float]
    tau_log: Optional[float]


def _cell(label: str, L_ex: int, solver: Callable[[], float]) -> Optional[float]:
    try:
        return solver()
    except AttentionAlignError as e:
        logger.warning(f"{label} at L_ex={L_ex} left empty: {e}")
        return None


def temperature_curve(L_tr: int, lengths: Sequence[int], fits: Mapping[int, GaussianFit],
                      p_max_tr: float, sigma_tr: float) -> List[TemperatureRow]:
    """
    Temperatures from both closed-form solvers and the log baseline at every grid length.

    Args:
        L_tr (int): Training length.
        lengths: Extrapolation lengths.
        fits: Layer-0 Gaussian fit per extrapolation length.
        p_max_tr (float): Average max probability at L_tr, tau = 1.
        sigma_tr (float): Gaussian sigma at L_tr.

    Returns:
        List[TemperatureRow]: One row per length; unsolvable cells are None.
    """
    if not lengths:
        raise EmptyInputError("temperature curve needs at least one length")
    rows = []
    for L_ex in lengths:
        if L_ex not in fits:
            raise EmptyInputError(f"no Gaussian fit for L_ex={L_ex}")
        sigma_ex = fits[L_ex].sigma
        rows.append(TemperatureRow(
            L_ex=L_ex,
            tau_prop1=_cell("tau_prop1", L_ex, lambda: solve_tau_maxprob(L_tr, L_ex, p_max_tr, sigma_tr, sigma_ex)),
            tau_prop2=_cell("tau_prop2", L_ex, lambda: solve_tau_entropy(L_tr, L_ex, sigma_tr, sigma_ex)),
            tau_log=_cell("tau_log", L_ex, lambda: log_baseline_tau(L_tr, L_ex)),
        ))
    return rows


def curve_csv(rows: Sequence[TemperatureRow]) -> str:
    return render_csv(CURVE_COLUMNS, ((row.L_ex, row.tau_prop1, row.tau_prop2, row.tau_log) for row in rows))


def parse_curve_csv(text: str) -> List[TemperatureRow]:
    def number(cell: str) -> Optional[float]:
        return float(cell) if cell else None

    return [
        TemperatureRow(
            L_ex=int(record["L_ex"]),
            tau_prop1=number(record["tau_prop1"]),
            tau_prop2=number(record["tau_prop2"]),
            tau_log=number(record["tau_log"]),
        )
        for record in csv.DictReader(io.StringIO(text))
    ]
