import argparse
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from src.utils.exceptions import UsageError
from src.utils.helpers import parse_lengths, resolve_seed

COMMANDS = ("calibrate", "predict-tau", "analyze", "oracle", "demo", "bucket-table", "qq", "init-model", "gen-tasks")
FORMATS = ("json", "csv")

REQUIRED: Dict[str, Tuple[str, ...]] = {
    "calibrate": ("model", "short_seqs", "long_seqs", "mode"),
    "predict-tau": ("l_tr", "lengths"),
    "analyze": ("model", "seqs"),
    "oracle": (),
    "demo": ("lengths",),
    "bucket-table": ("model", "length"),
    "qq": (),
    "init-model": ("out",),
    "gen-tasks": ("out", "length"),
}


@dataclass
class RunConfig:
    command: str
    model: Optional[Path] = None
    short_seqs: Optional[Path] = None
    long_seqs: Optional[Path] = None
    seqs: Optional[Path] = None
    fits: Optional[Path] = None
    l_tr: Optional[int] = None
    l_ex: Optional[int] = None
    lengths: Optional[List[int]] = None
    mode: Optional[str] = None
    taus: Optional[List[float]] = None
    refine: bool = False
    seed: int = 0
    out: Optional[Path] = None
    format: Optional[str] = None
    samples: Optional[int] = None
    sigma: Optional[float] = None
    tau: Optional[float] = None
    pmax_tr: Optional[float] = None
    lmax: Optional[float] = None
    gap: Optional[float] = None
    monte_carlo: bool = False
    all_layers: bool = False
    head: int = 0
    query_pos: Optional[int] = None
    length: Optional[int] = None
    layers: Optional[int] = None
    heads: Optional[int] = None
    d_model: Optional[int] = None
    d_kv: Optional[int] = None
    vocab: Optional[int] = None
    kind: str = "random"
    count: int = 1

    @classmethod
    def from_namespace(cls, namespace: argparse.Namespace) -> "RunConfig":
        values = {item.name: getattr(namespace, item.name, None) for item in fields(cls)}
        values = {key: value for key, value in values.items() if value is not None}
        if isinstance(values.get("lengths"), str):
            values["lengths"] = parse_lengths(values["lengths"])
        if isinstance(values.get("taus"), str):
            try:
                values["taus"] = [float(part) for part in values["taus"].split(',') if part.strip()]
            except ValueError as e:
                raise UsageError(f"invalid temperature grid {values['taus']!r}") from e
        values["seed"] = resolve_seed(getattr(namespace, "seed", None))
        for key in ("model", "short_seqs", "long_seqs", "seqs", "fits", "out"):
            if key in values:
                values[key] = Path(values[key])
        config = cls(**values)
        config.validate()
        return config

    def validate(self) -> None:
        """Check the fields each command needs before anything runs."""
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.format is not None and self.format not in FORMATS:
            raise UsageError(f"unknown format {self.format!r}, expected one of {FORMATS}")
        if self.command == "predict-tau" and self.lengths is None and self.l_ex is not None:
            self.lengths = [self.l_ex]
        if self.command == "demo" and self.lengths is None and self.l_tr is not None and self.l_ex is not None:
            self.lengths = [self.l_tr, self.l_ex]
        missing = [name for name in REQUIRED[self.command] if getattr(self, name) in (None, [])]
        if missing:
            flags = ', '.join('--' + name.replace('_', '-') for name in missing)
            raise UsageError(f"{self.command} requires {flags}")
        if self.l_tr is not None and self.l_ex is not None and self.command == "calibrate" and self.l_ex <= self.l_tr:
            raise UsageError(f"L_ex={self.l_ex} must exceed L_tr={self.l_tr}")
        if self.samples is not None and self.samples < 1:
            raise UsageError(f"--samples must be >= 1, got {self.samples}")
