import logging.config

import numpy as np

from src.cli.run_config import RunConfig
from src.configs.helpers import emit_output, sibling_path
from src.configs.log_config import LOGGING
from src.configs.settings import EncoderSettings, TaskSettings
from src.database.sequence_store import random_sequences, write_sequences
from src.encoder.model import EncoderConfig, init_encoder
from src.encoder.persistence import save_encoder
from src.tasks.generators import gen_lines, gen_passkey, tasks_metadata, tasks_to_jsonl
from src.utils import helpers
from src.utils.exceptions import UsageError

logging.config.dictConfig(LOGGING)
logger = logging.getLogger(__name__)

TASK_KINDS = ("random", "passkey", "line")


class GeneralCommands:
    def __init__(self):
        self.log_command = helpers.log_command

    def init_model(self, config: RunConfig) -> int:
        """
        Handle the init-model command: write a seeded toy encoder.

        d_model defaults to heads * d_kv when only those two are given.
        """
        heads = config.heads or EncoderSettings.NUM_HEADS
        d_kv = config.d_kv or EncoderSettings.D_KV
        encoder_config = EncoderConfig(
            num_layers=config.layers or EncoderSettings.NUM_LAYERS,
            num_heads=heads,
            d_model=config.d_model or heads * d_kv,
            d_kv=d_kv,
            vocab_size=config.vocab or EncoderSettings.VOCAB_SIZE,
            seed=config.seed,
        )
        self.log_command("init-model", out=config.out, **vars(encoder_config))
        save_encoder(init_encoder(encoder_config), config.out)
        return 0

    def gen_tasks(self, config: RunConfig) -> int:
        """
        Handle the gen-tasks command.

        Args:
            config (RunConfig): kind is random (uniform tokens of --length), passkey
                (--length junk tokens around a hidden passkey) or line (--length key-value lines).

        Returns:
            int: Exit code.
        """
        self.log_command("gen-tasks", kind=config.kind, length=config.length, count=config.count, seed=config.seed)
        if config.kind not in TASK_KINDS:
            raise UsageError(f"unknown task kind {config.kind!r}, expected one of {TASK_KINDS}")
        if config.count < 1:
            raise UsageError(f"--count must be >= 1, got {config.count}")

        if config.kind == "random":
            vocab = config.vocab or EncoderSettings.VOCAB_SIZE
            write_sequences(random_sequences(config.count, config.length, config.seed, vocab), config.out)
            return 0

        tasks = []
        for index in range(config.count):
            seed = config.seed + index
            if config.kind == "passkey":
                passkey = np.random.default_rng([seed, TaskSettings.PASSKEY_MARKER]).integers(
                    0, TaskSettings.PASSKEY_MARKER, size=TaskSettings.PASSKEY_TOKENS)
                tasks.append(gen_passkey(passkey.tolist(), config.length, seed))
            else:
                tasks.append(gen_lines(config.length, seed))
        emit_output(tasks_to_jsonl(tasks), config.out)
        emit_output(tasks_metadata(tasks), sibling_path(config.out, ".meta.json"))
        logger.info(f"Generated {len(tasks)} {config.kind} tasks into {config.out}")
        return 0
