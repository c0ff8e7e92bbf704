import csv
import logging.config
from typing import Dict, List

from src.analytic.curves import curve_csv, temperature_curve
from src.analytic.gaussian import GaussianFit
from src.calibration.alignment import AlignmentMode, calibrate
from src.cli.run_config import RunConfig
from src.configs.helpers import emit_output, sibling_path
from src.configs.log_config import LOGGING
from src.configs.settings import CalibrationSettings, EnvSettings
from src.database.sequence_store import SequenceStore
from src.encoder.model import ToyEncoder
from src.encoder.persistence import load_encoder
from src.utils import helpers
from src.utils.exceptions import PreconditionError, UsageError

logging.config.dictConfig(LOGGING)
logger = logging.getLogger(__name__)


def select_sequences(store: SequenceStore, length) -> List[List[int]]:
    if length is None:
        return store.sequences
    selected = store.with_length(length)
    if not selected:
        raise UsageError(f"{store.file_path} has no sequences of length {length} (found {store.lengths})")
    return selected


def read_fits_csv(text: str) -> Dict[int, dict]:
    """Rows of an analyze CSV keyed by length."""
    rows = {}
    for record in csv.DictReader(text.splitlines()):
        rows[int(record["length"])] = {key: float(value) if value else None for key, value in record.items()}
    return rows


class CalibrationCommands:
    def __init__(self):
        self.log_command = helpers.log_command
        self.log_memory_usage = helpers.log_memory_usage

    def calibrate(self, config: RunConfig) -> int:
        """
        Handle the calibrate command: grid-search tau_ex on a model and two sequence files.

        Args:
            config (RunConfig): Needs model, short_seqs, long_seqs and mode.

        Returns:
            int: Exit code.
        """
        self.log_command("calibrate", model=config.model, mode=config.mode, l_tr=config.l_tr, l_ex=config.l_ex)
        mode = AlignmentMode.parse(config.mode)
        encoder = ToyEncoder(load_encoder(config.model))
        short_seqs = select_sequences(SequenceStore(config.short_seqs), config.l_tr)
        long_seqs = select_sequences(SequenceStore(config.long_seqs), config.l_ex)
        try:
            result = calibrate(
                encoder, short_seqs, long_seqs, mode,
                grid=config.taus or CalibrationSettings.TAU_GRID,
                refine=config.refine,
                workers=EnvSettings.WORKERS,
            )
        except PreconditionError as e:
            raise UsageError(str(e)) from e
        self.log_memory_usage("calibrate")

        if config.format == "csv":
            emit_output(result.grid_csv(), config.out)
            return 0
        emit_output(result.to_json(), config.out)
        if config.out is not None:
            emit_output(result.grid_csv(), sibling_path(config.out, ".grid.csv"))
        return 0

    def predict_tau(self, config: RunConfig) -> int:
        """
        Handle the predict-tau command: closed-form and log-baseline temperatures per length.

        Fit inputs come from an analyze CSV (--fits) or from inline --sigma and --pmax-tr.
        """
        self.log_command("predict-tau", l_tr=config.l_tr, lengths=config.lengths, fits=config.fits)
        fits, sigma_tr, p_max_tr = self._fit_inputs(config)
        rows = temperature_curve(config.l_tr, config.lengths, fits, p_max_tr, sigma_tr)
        emit_output(curve_csv(rows), config.out)
        return 0

    @staticmethod
    def _fit_inputs(config: RunConfig):
        if config.fits is not None:
            if not config.fits.exists():
                raise FileNotFoundError(f"fits file {config.fits} not found")
            table = read_fits_csv(config.fits.read_text(encoding='utf-8'))
            needed = [config.l_tr] + list(config.lengths)
            missing = [length for length in needed if length not in table or table[length].get("sigma") is None]
            if missing:
                raise UsageError(f"fits file {config.fits} has no sigma for lengths {missing}")
            fits = {
                length: GaussianFit(sigma=table[length]["sigma"], l_max=table[length]["l_max"], length=length)
                for length in config.lengths
            }
            p_max_tr = config.pmax_tr if config.pmax_tr is not None else table[config.l_tr]["p_max"]
            return fits, table[config.l_tr]["sigma"], p_max_tr

        if config.sigma is None or config.pmax_tr is None:
            raise UsageError("predict-tau needs --fits, or both --sigma and --pmax-tr")
        l_max = config.lmax if config.lmax is not None else 0.0
        fits = {length: GaussianFit(sigma=config.sigma, l_max=l_max, length=length) for length in config.lengths}
        return fits, config.sigma, config.pmax_tr
