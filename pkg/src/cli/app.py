import argparse
import logging.config
from typing import Callable, Dict, List, Optional

from src.cli.run_config import COMMANDS, FORMATS, RunConfig
from src.commands.analysis_commands import AnalysisCommands
from src.commands.calibration_commands import CalibrationCommands
from src.commands.general_commands import TASK_KINDS, GeneralCommands
from src.commands.verification_commands import VerificationCommands
from src.configs.log_config import LOGGING
from src.utils.exceptions import AttentionAlignError, UsageError

logging.config.dictConfig(LOGGING)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_USAGE = 2

HELP = {
    "calibrate": "grid-search the extrapolation temperature on a model",
    "predict-tau": "closed-form and log-baseline temperatures per length",
    "analyze": "mean max probability, entropy and Gaussian fit per length",
    "oracle": "Monte-Carlo checks of the Gaussian approximations",
    "demo": "needle probability under fixed and entropy-aligned temperatures",
    "bucket-table": "relative position bias seen by one query position",
    "qq": "QQ normality report of an average logit vector",
    "init-model": "write a seeded toy encoder",
    "gen-tasks": "write random, passkey or line-retrieval sequences",
}


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model")
    common.add_argument("--short-seqs")
    common.add_argument("--long-seqs")
    common.add_argument("--seqs")
    common.add_argument("--fits", help="analyze CSV to take Gaussian fits from")
    common.add_argument("--l-tr", type=int)
    common.add_argument("--l-ex", type=int)
    common.add_argument("--lengths", help="comma-separated lengths")
    common.add_argument("--mode", help="max or ent")
    common.add_argument("--taus", help="comma-separated temperature grid")
    common.add_argument("--refine", action="store_true")
    common.add_argument("--seed", type=int)
    common.add_argument("--out")
    common.add_argument("--format", help="/".join(FORMATS))
    common.add_argument("--samples", type=int)
    common.add_argument("--sigma", type=float)
    common.add_argument("--tau", type=float)
    common.add_argument("--pmax-tr", type=float)
    common.add_argument("--lmax", type=float)
    common.add_argument("--gap", type=float)
    common.add_argument("--monte-carlo", action="store_true")
    common.add_argument("--all-layers", action="store_true", help="fit on every layer instead of layer 0")
    common.add_argument("--head", type=int)
    common.add_argument("--query-pos", type=int)
    common.add_argument("--length", type=int)
    common.add_argument("--layers", type=int)
    common.add_argument("--heads", type=int)
    common.add_argument("--d-model", type=int)
    common.add_argument("--d-kv", type=int)
    common.add_argument("--vocab", type=int)
    common.add_argument("--kind", help="/".join(TASK_KINDS))
    common.add_argument("--count", type=int)
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="attn-align", description="Attention temperature calibration toolkit")
    subparsers = parser.add_subparsers(dest="command")
    common = _common_flags()
    for command in COMMANDS:
        subparsers.add_parser(command, parents=[common], help=HELP[command])
    return parser


class AttentionAlignApp:
    """Command-line front end; one command per invocation."""

    def __init__(self) -> None:
        self.parser = build_parser()
        self.handlers: Dict[str, Callable[[RunConfig], int]] = {}
        self._setup_handlers()

    def _setup_handlers(self) -> None:
        """Map every command name to its handler."""
        calibration_commands = CalibrationCommands()
        analysis_commands = AnalysisCommands()
        verification_commands = VerificationCommands()
        general_commands = GeneralCommands()

        command_handlers = [
            ('calibrate', calibration_commands.calibrate),
            ('predict-tau', calibration_commands.predict_tau),
            ('analyze', analysis_commands.analyze),
            ('qq', analysis_commands.qq),
            ('bucket-table', analysis_commands.bucket_table),
            ('oracle', verification_commands.oracle),
            ('demo', verification_commands.demo),
            ('init-model', general_commands.init_model),
            ('gen-tasks', general_commands.gen_tasks),
        ]

        for command, handler in command_handlers:
            self.handlers[command] = handler

    def run(self, argv: Optional[List[str]] = None) -> int:
        """
        Parse argv, run one command and translate its outcome into an exit code.

        Returns:
            int: 0 on success, 1 when a verification check fails, 2 on usage or input errors.
        """
        try:
            namespace = self.parser.parse_args(argv)
        except SystemExit as e:
            return EXIT_OK if e.code in (0, None) else EXIT_USAGE
        if namespace.command is None:
            self.parser.print_usage()
            return EXIT_USAGE

        command = namespace.command
        try:
            config = RunConfig.from_namespace(namespace)
            return self.handlers[command](config)
        except UsageError as e:
            logger.error(f"{command}: usage error: {e}")
        except FileNotFoundError as e:
            logger.error(f"{command}: {e}")
        except AttentionAlignError as e:
            logger.error(f"{command}: {type(e).__name__}: {e}")
        except ValueError as e:
            logger.error(f"{command}: invalid input: {e}")
        return EXIT_USAGE
