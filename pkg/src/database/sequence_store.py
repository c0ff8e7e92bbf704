import json
import logging.config
from pathlib import Path
from typing import Iterable, List, Sequence

import numpy as np

from src.configs.helpers import write_atomic
from src.configs.log_config import LOGGING
from src.configs.settings import EncoderSettings
from src.utils.exceptions import EmptyInputError, ShapeError

logging.config.dictConfig(LOGGING)
logger = logging.getLogger(__name__)


class SequenceStore:
    """Token sequences stored as JSON lines, one integer array per line."""

    def __init__(self, file_path: Path):
        self.file_path = Path(file_path)
        self.sequences: List[List[int]] = []
        self.load_sequences()

    def load_sequences(self) -> None:
        """Load sequences from the file path."""
        if not self.file_path.exists():
            logger.error(f"Sequence file not found: {self.file_path}")
            raise FileNotFoundError(f"sequence file {self.file_path} not found")
        sequences = []
        with self.file_path.open('r', encoding='utf-8') as file:
            for number, line in enumerate(file, start=1):
                if not line.strip():
                    continue
                try:
                    tokens = json.loads(line)
                except json.JSONDecodeError as e:
                    raise ShapeError(f"{self.file_path}:{number}: not valid JSON: {e}") from e
                if not isinstance(tokens, list) or not tokens or not all(
                        isinstance(token, int) and not isinstance(token, bool) for token in tokens):
                    raise ShapeError(f"{self.file_path}:{number}: expected a non-empty array of integers")
                sequences.append(tokens)
        if not sequences:
            logger.error(f"Sequence file is empty: {self.file_path}")
            raise EmptyInputError(f"sequence file {self.file_path} holds no sequences")
        self.sequences = sequences
        logger.info(f"Loaded {len(self.sequences)} sequences from {self.file_path}")

    @property
    def lengths(self) -> List[int]:
        return sorted({len(tokens) for tokens in self.sequences})

    def with_length(self, length: int) -> List[List[int]]:
        return [tokens for tokens in self.sequences if len(tokens) == length]

    def __len__(self) -> int:
        return len(self.sequences)


def random_sequences(count: int, length: int, seed: int,
                     vocab_size: int = EncoderSettings.VOCAB_SIZE) -> List[List[int]]:
    """`count` i.i.d. uniform token sequences of the given length."""
    if count < 1 or length < 1:
        raise EmptyInputError("need at least one sequence of length >= 1")
    rng = np.random.default_rng([seed, length])
    return rng.integers(0, vocab_size, size=(count, length)).tolist()


def sequences_to_jsonl(sequences: Iterable[Sequence[int]]) -> str:
    return ''.join(json.dumps([int(token) for token in tokens]) + '\n' for tokens in sequences)


def write_sequences(sequences: Iterable[Sequence[int]], path: Path) -> Path:
    return write_atomic(Path(path), sequences_to_jsonl(sequences))
