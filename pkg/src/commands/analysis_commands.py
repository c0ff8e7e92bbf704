import json
import logging.config
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from src.analytic.gaussian import GaussianFit, SortedLogitAccumulator, fit_gaussian, lmax_drift
from src.analytic.oracles import qq_check
from src.attention.softmax_stats import AttentionStats
from src.cli.run_config import RunConfig
from src.commands.calibration_commands import select_sequences
from src.configs.helpers import emit_output, render_csv, sibling_path
from src.configs.log_config import LOGGING
from src.configs.settings import OracleSettings, OutputSettings
from src.database.sequence_store import SequenceStore
from src.encoder.model import ToyEncoder
from src.encoder.persistence import load_encoder
from src.rpe.bias import bias_profile, bias_profile_csv
from src.utils import helpers
from src.utils.decorators import log_duration
from src.utils.exceptions import UsageError, ZeroSigmaError

logging.config.dictConfig(LOGGING)
logger = logging.getLogger(__name__)

ANALYZE_COLUMNS = ["length", "p_max", "entropy", "sigma", "l_max"]


@dataclass
class LengthReport:
    length: int
    tau: float
    stats: AttentionStats
    fit: Optional[GaussianFit]
    layers: List[AttentionStats] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "length": self.length,
            "tau": self.tau,
            "p_max": self.stats.p_max,
            "entropy": self.stats.entropy,
            "rows": self.stats.rows,
            "sigma": self.fit.sigma if self.fit else None,
            "l_max": self.fit.l_max if self.fit else None,
            "fit_layer": self.fit.layer if self.fit else None,
            "layers": [
                {"layer": index, "p_max": layer.p_max, "entropy": layer.entropy}
                for index, layer in enumerate(self.layers)
            ],
        }


def analyze_csv(reports: Sequence[LengthReport]) -> str:
    return render_csv(ANALYZE_COLUMNS, (
        (report.length, report.stats.p_max, report.stats.entropy,
         report.fit.sigma if report.fit else None, report.fit.l_max if report.fit else None)
        for report in reports
    ))


@log_duration
def analyze_length(encoder: ToyEncoder, sequences: List[List[int]], tau: float,
                   all_layers: bool = False) -> LengthReport:
    """
    Mean attention statistics and a Gaussian fit for sequences of one length.

    Args:
        encoder (ToyEncoder): The model to trace.
        sequences: Token sequences of a common length.
        tau (float): Temperature applied during the forward passes.
        all_layers (bool): Fit on the rows of every layer instead of layer 0 only.

    Returns:
        LengthReport: Row-weighted means, per-layer means and the fit (None for a constant average vector).
    """
    accumulator = SortedLogitAccumulator()
    overall, per_layer = [], [[] for _ in range(encoder.config.num_layers)]
    for tokens in sequences:
        trace = encoder.forward(tokens, tau, record=True)
        overall.append(trace.mean_stats())
        for layer in range(encoder.config.num_layers):
            per_layer[layer].append(trace.layer_stats(layer))
        fitted = trace.logit_rows if all_layers else trace.logit_rows[:1]
        accumulator.add(fitted.reshape(-1, trace.length))

    label = "all" if all_layers else "layer0"
    try:
        fit = fit_gaussian(accumulator.average(), layer=label)
    except ZeroSigmaError:
        logger.warning(f"L={len(sequences[0])}: average logit vector is constant, no Gaussian fit")
        fit = None
    return LengthReport(
        length=len(sequences[0]),
        tau=tau,
        stats=AttentionStats.mean(overall),
        fit=fit,
        layers=[AttentionStats.mean(stats) for stats in per_layer],
    )


class AnalysisCommands:
    def __init__(self):
        self.log_command = helpers.log_command
        self.log_memory_usage = helpers.log_memory_usage

    def analyze(self, config: RunConfig) -> int:
        """
        Handle the analyze command: per-length attention statistics and layer-0 Gaussian fits.

        Args:
            config (RunConfig): Needs model and seqs; lengths default to every length in the file.

        Returns:
            int: Exit code.
        """
        self.log_command("analyze", model=config.model, seqs=config.seqs, lengths=config.lengths, tau=config.tau)
        encoder = ToyEncoder(load_encoder(config.model))
        store = SequenceStore(config.seqs)
        tau = config.tau if config.tau is not None else 1.0
        lengths = config.lengths or store.lengths

        reports = [analyze_length(encoder, select_sequences(store, length), tau, config.all_layers) for length in lengths]
        self.log_memory_usage("analyze")

        if config.format == "csv":
            emit_output(analyze_csv(reports), config.out)
            return 0
        document = [report.to_dict() for report in reports]
        base = reports[0].fit
        for report, entry in zip(reports, document):
            entry["l_max_drift"] = lmax_drift(base, report.fit) if base and report.fit and base.l_max else None
        emit_output(json.dumps(document, indent=OutputSettings.JSON_INDENT), config.out)
        if config.out is not None:
            emit_output(analyze_csv(reports), sibling_path(config.out, ".csv"))
        return 0

    def qq(self, config: RunConfig) -> int:
        """Handle the qq command on a model's layer-0 average logit vector, or on synthetic normals."""
        self.log_command("qq", model=config.model, seqs=config.seqs, samples=config.samples)
        if config.model is not None or config.seqs is not None:
            if config.model is None or config.seqs is None:
                raise UsageError("qq on a model needs both --model and --seqs")
            encoder = ToyEncoder(load_encoder(config.model))
            store = SequenceStore(config.seqs)
            length = config.length or store.lengths[0]
            accumulator = SortedLogitAccumulator()
            for tokens in select_sequences(store, length):
                accumulator.add(encoder.layer_rows(tokens, 1.0, layer=0))
            samples = accumulator.average().values
        else:
            count = config.samples or OracleSettings.QQ_SAMPLES
            sigma = config.sigma if config.sigma is not None else OracleSettings.SIGMA
            samples = np.random.default_rng(config.seed).normal(0.0, sigma, size=count)

        report = qq_check(samples)
        logger.info(f"QQ linearity {report.linearity:.6f} over {len(report.points)} samples")
        if config.format == "json":
            emit_output(json.dumps({"linearity": report.linearity, "points": report.points},
                                   indent=OutputSettings.JSON_INDENT), config.out)
        else:
            emit_output(report.to_csv(), config.out)
        return 0

    def bucket_table(self, config: RunConfig) -> int:
        """Handle the bucket-table command: the bias one query position sees across all keys."""
        self.log_command("bucket-table", model=config.model, head=config.head, length=config.length)
        weights = load_encoder(config.model)
        if not 0 <= config.head < len(weights.bucket_tables):
            raise UsageError(f"--head {config.head} outside [0, {len(weights.bucket_tables)})")
        query_pos = config.query_pos if config.query_pos is not None else config.length // 2
        try:
            profile = bias_profile(weights.bucket_tables[config.head], query_pos, config.length)
        except IndexError as e:
            raise UsageError(str(e)) from e
        emit_output(bias_profile_csv(profile), config.out)
        return 0
