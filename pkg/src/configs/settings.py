import os

from dataclasses import dataclass

from dotenv import load_dotenv

load_dotenv()


@dataclass
class OutputSettings:
    CSV_PRECISION: str = ".6g"
    JSON_INDENT: int = 2


class EncoderSettings:
    NUM_LAYERS = 2
    NUM_HEADS = 4
    D_MODEL = 64
    D_KV = 16
    D_FF = 128
    VOCAB_SIZE = 256
    DEFAULT_SEED = 0
    NUM_BUCKETS = 32
    RMS_EPS = 1e-6


class CalibrationSettings:
    TAU_GRID = (1.00, 0.95, 0.90, 0.85, 0.80, 0.75, 0.70, 0.65, 0.60, 0.55, 0.50)
    SEQUENCES_PER_LENGTH = 8
    MONOTONE_TOLERANCE = 1e-12


class OracleSettings:
    SIGMA = 1.0
    TAU = 1.0
    SAMPLES = 1_000_000
    MIN_GUARANTEED_SAMPLES = 1_000
    FIDELITY_LENGTH = 4096
    FIDELITY_ROWS = 2_000
    FIDELITY_TAUS = (1.0, 0.7, 0.5)
    QQ_SAMPLES = 10_000
    CHUNK_ROWS = 256

    EXPECTATION_REL_TOL = 0.01
    LEL_REL_TOL = 0.02
    ENTROPY_ABS_TOL = 0.05
    PMAX_REL_TOL = 0.10
    QQ_MIN_LINEARITY = 0.995


class TaskSettings:
    VOCAB_SIZE = 256
    PASSKEY_MARKER = 255
    PASSKEY_TOKENS = 5
    NEEDLE_REPLICATES = 10_000
    NEEDLE_GAP = 4.0
    NEEDLE_SIGMA = 1.0


class EnvSettings:
    SEED = os.getenv('ATTN_ALIGN_SEED')
    LOG_LEVEL = os.getenv('ATTN_ALIGN_LOG_LEVEL', 'INFO')
    LOG_FILE = os.getenv('ATTN_ALIGN_LOG_FILE')
    WORKERS = int(os.getenv('ATTN_ALIGN_WORKERS', '1'))
