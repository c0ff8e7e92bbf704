from typing import List, Optional

import logging.config

import psutil

from src.configs.log_config import LOGGING
from src.configs.settings import EncoderSettings, EnvSettings
from src.utils.exceptions import UsageError

logging.config.dictConfig(LOGGING)
logger = logging.getLogger(__name__)


def parse_lengths(text: Optional[str]) -> List[int]:
    """
    Parse a comma-separated list of sequence lengths.

    Args:
        text (str): The flag value, e.g. "1024,2048,4096".

    Returns:
        List[int]: The lengths in the order given.
    """
    if not text or not text.strip():
        raise UsageError("length list is empty")
    try:
        lengths = [int(part) for part in text.split(',') if part.strip()]
    except ValueError as e:
        raise UsageError(f"invalid length list {text!r}: {e}") from e
    if not lengths or any(length < 1 for length in lengths):
        raise UsageError(f"lengths must be positive integers, got {text!r}")
    return lengths


def resolve_seed(seed: Optional[int]) -> int:
    """Explicit seed first, then ATTN_ALIGN_SEED, then the package default."""
    if seed is not None:
        return int(seed)
    if EnvSettings.SEED:
        try:
            return int(EnvSettings.SEED)
        except ValueError as e:
            raise UsageError(f"ATTN_ALIGN_SEED is not an integer: {EnvSettings.SEED!r}") from e
    return EncoderSettings.DEFAULT_SEED


def log_command(command: str, **flags) -> None:
    """
    Log the invocation of a command with its non-empty flags.

    Args:
        command (str): The command that was invoked.
    """
    shown = ' '.join(f"{key}={value}" for key, value in flags.items() if value is not None)
    logger.info(f"{command} invoked {shown}".rstrip())


def log_memory_usage(context: str) -> float:
    """Log the resident memory of this process in MiB and return it."""
    rss_mib = psutil.Process().memory_info().rss / 2 ** 20
    memory_usage = psutil.virtual_memory().percent
    logger.info(f"{context}: resident memory {rss_mib:.1f} MiB | system memory {memory_usage}%")
    return rss_mib
