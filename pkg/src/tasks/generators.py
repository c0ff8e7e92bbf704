"""Synthetic passkey and line-retrieval token sequences.

Token ids live in 0..255. Id 255 marks the passkey, 254 opens a key-value
line, 253 introduces the query at the end of a line-retrieval sequence; junk,
keys and values are drawn from the ids below those.
"""
import json
import logging.config
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from src.configs.log_config import LOGGING
from src.configs.settings import TaskSettings
from src.database.sequence_store import sequences_to_jsonl
from src.utils.exceptions import PreconditionError

logging.config.dictConfig(LOGGING)
logger = logging.getLogger(__name__)

LINE_MARKER = 254
QUERY_MARKER = 253
LINE_ALPHABET = 253


class TaskKind(Enum):
    PASSKEY = "passkey"
    LINE = "line"


@dataclass
class SyntheticTask:
    tokens: List[int]
    answer_span: Tuple[int, int]
    kind: TaskKind
    seed: int

    @property
    def answer(self) -> List[int]:
        start, end = self.answer_span
        return self.tokens[start:end]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "seed": self.seed,
            "answer_span": list(self.answer_span),
            "tokens": self.tokens,
        }


def gen_passkey(passkey: Sequence[int], junk_len: int, seed: int) -> SyntheticTask:
    """
    Hide marker + passkey at a seeded random position inside uniform junk.

    Args:
        passkey (Sequence[int]): Passkey token ids, each below the marker id.
        junk_len (int): Number of junk tokens.
        seed (int): Random seed.

    Returns:
        SyntheticTask: answer_span covers the passkey tokens (end exclusive).
    """
    marker = TaskSettings.PASSKEY_MARKER
    if junk_len < 0:
        raise PreconditionError(f"junk_len must be >= 0, got {junk_len}")
    if not passkey or any(not 0 <= token < marker for token in passkey):
        raise PreconditionError(f"passkey tokens must be non-empty ids in [0, {marker})")
    rng = np.random.default_rng(seed)
    junk = rng.integers(0, marker, size=junk_len).tolist()
    position = int(rng.integers(0, junk_len + 1))
    tokens = junk[:position] + [marker] + [int(token) for token in passkey] + junk[position:]
    logger.debug(f"Passkey of {len(passkey)} tokens hidden at {position} in {len(tokens)} tokens")
    return SyntheticTask(
        tokens=tokens,
        answer_span=(position + 1, position + 1 + len(passkey)),
        kind=TaskKind.PASSKEY,
        seed=seed,
    )


def gen_lines(n_lines: int, seed: int) -> SyntheticTask:
    """n_lines groups [LINE, k1, k2, v1, v2] with distinct two-token keys, then [QUERY, k1, k2]."""
    if n_lines < 1 or n_lines > LINE_ALPHABET ** 2:
        raise PreconditionError(f"n_lines must be in [1, {LINE_ALPHABET ** 2}], got {n_lines}")
    rng = np.random.default_rng(seed)
    key_codes = rng.choice(LINE_ALPHABET ** 2, size=n_lines, replace=False)
    values = rng.integers(0, LINE_ALPHABET, size=(n_lines, 2))
    queried = int(rng.integers(0, n_lines))

    tokens: List[int] = []
    answer_span = (0, 0)
    for line, code in enumerate(key_codes):
        key = list(divmod(int(code), LINE_ALPHABET))
        tokens.append(LINE_MARKER)
        tokens.extend(key)
        if line == queried:
            answer_span = (len(tokens), len(tokens) + 2)
        tokens.extend(int(value) for value in values[line])
    tokens.append(QUERY_MARKER)
    tokens.extend(divmod(int(key_codes[queried]), LINE_ALPHABET))
    logger.debug(f"Generated {n_lines} lines, querying line {queried}")
    return SyntheticTask(tokens=tokens, answer_span=answer_span, kind=TaskKind.LINE, seed=seed)


def line_keys(task: SyntheticTask) -> List[Tuple[int, int]]:
    """Keys of every line, in order."""
    return [
        (task.tokens[index + 1], task.tokens[index + 2])
        for index in range(0, len(task.tokens) - 3, 5)
        if task.tokens[index] == LINE_MARKER
    ]


def tasks_to_jsonl(tasks: Iterable[SyntheticTask]) -> str:
    """Token arrays only, one per line, readable by the sequence store."""
    return sequences_to_jsonl(task.tokens for task in tasks)


def tasks_metadata(tasks: Iterable[SyntheticTask]) -> str:
    return json.dumps([{key: value for key, value in task.to_dict().items() if key != "tokens"} for task in tasks])
