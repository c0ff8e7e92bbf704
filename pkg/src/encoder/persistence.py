import json
import logging.config
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from src.configs.helpers import write_atomic
from src.configs.log_config import LOGGING
from src.encoder.model import EncoderConfig, EncoderWeights, LayerWeights
from src.rpe.bias import JSON_KEY, BucketTable, dump_bucket_tables
from src.utils.exceptions import EncoderConfigError

logging.config.dictConfig(LOGGING)
logger = logging.getLogger(__name__)

LAYER_FIELDS = [item.name for item in fields(LayerWeights)]


def _flat(array: np.ndarray) -> list:
    return np.ascontiguousarray(array).ravel().tolist()


def _unflat(values, shape, name: str) -> np.ndarray:
    array = np.asarray(values, dtype=np.float64)
    expected = int(np.prod(shape))
    if array.size != expected:
        raise EncoderConfigError(f"{name} holds {array.size} values, expected {expected} for shape {shape}")
    return array.reshape(shape)


def dump_encoder(weights: EncoderWeights) -> dict:
    """Config fields plus flat row-major weight arrays."""
    document = {
        "config": asdict(weights.config),
        "embedding": _flat(weights.embedding),
        "final_norm": _flat(weights.final_norm),
        "layers": [{name: _flat(getattr(layer, name)) for name in LAYER_FIELDS} for layer in weights.layers],
    }
    document.update(dump_bucket_tables(weights.bucket_tables))
    return document


def parse_encoder(document: dict) -> EncoderWeights:
    try:
        config = EncoderConfig(**document["config"])
    except (KeyError, TypeError) as e:
        raise EncoderConfigError(f"invalid encoder config: {e}") from e
    config.validate()
    d_model, d_ff = config.d_model, config.d_ff
    shapes = {
        "query": (d_model, d_model),
        "key": (d_model, d_model),
        "value": (d_model, d_model),
        "output": (d_model, d_model),
        "ff_in": (d_model, d_ff),
        "ff_out": (d_ff, d_model),
        "attn_norm": (d_model,),
        "ff_norm": (d_model,),
    }
    try:
        layers = [
            LayerWeights(**{name: _unflat(layer[name], shapes[name], name) for name in LAYER_FIELDS})
            for layer in document["layers"]
        ]
        weights = EncoderWeights(
            config=config,
            embedding=_unflat(document["embedding"], (config.vocab_size, d_model), "embedding"),
            layers=layers,
            bucket_tables=[BucketTable(values=values, head_id=head) for head, values in enumerate(document[JSON_KEY])],
            final_norm=_unflat(document["final_norm"], (d_model,), "final_norm"),
        )
    except KeyError as e:
        raise EncoderConfigError(f"encoder document is missing {e}") from e
    weights.validate()
    return weights


def save_encoder(weights: EncoderWeights, path: Path) -> Path:
    return write_atomic(Path(path), json.dumps(dump_encoder(weights)))


def load_encoder(path: Path) -> EncoderWeights:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"model file {path} not found")
    with path.open('r', encoding='utf-8') as file:
        weights = parse_encoder(json.load(file))
    logger.info(f"Loaded encoder from {path}")
    return weights
