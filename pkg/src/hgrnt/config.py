"""Run configuration: a flat ``key = value`` text file with ``#`` comments.

Relative paths are resolved against the directory holding the file.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional

from .model import ModelConfig
from .optim import AdamHyper

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


_PATH_KEYS = ("train", "dev", "test", "embeddings", "checkpoint_dir")
_BOOL_WORDS = {"1": True, "true": True, "yes": True, "on": True,
               "0": False, "false": False, "no": False, "off": False}


@dataclass
class RunConfig:
    train: Optional[Path] = None
    dev: Optional[Path] = None
    test: Optional[Path] = None
    embeddings: Optional[Path] = None
    embedding_fallback: bool = True
    checkpoint_dir: Path = Path("checkpoints")
    embed_dim: int = 100
    sent_hidden: int = 128
    ctx_hidden: int = 128
    r: int = 4
    use_context: bool = True
    use_tensor: bool = True
    threshold: float = 0.5
    seed: int = 42
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    max_epochs: int = 50
    patience: int = 5
    clip_norm: float = 5.0

    def __post_init__(self):
        if self.max_epochs < 0 or self.patience < 1:
            raise ConfigError("max_epochs must be >= 0 and patience >= 1")
        try:
            self.model_config()
            self.adam()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            embed_dim=self.embed_dim,
            sent_hidden=self.sent_hidden,
            ctx_hidden=self.ctx_hidden,
            r=self.r,
            use_context=self.use_context,
            use_tensor=self.use_tensor,
            threshold=self.threshold,
            seed=self.seed,
        )

    def adam(self) -> AdamHyper:
        return AdamHyper(self.learning_rate, self.beta1, self.beta2, self.epsilon)

    def split_path(self, split: str) -> Path:
        if split not in ("train", "dev", "test"):
            raise ConfigError(f"unknown split {split!r}")
        path = getattr(self, split)
        if path is None:
            raise ConfigError(f"no path configured for the {split} split")
        return path

    def to_dict(self) -> Dict[str, str]:
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, bool):
                value = "true" if value else "false"
            out[f.name] = str(value)
        return out

    @classmethod
    def from_dict(cls, values: Dict[str, str], base_dir: Optional[Path] = None) -> "RunConfig":
        kinds = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in kinds:
                raise ConfigError(f"unknown configuration key {key!r}")
            kwargs[key] = _convert(key, raw, base_dir)
        return cls(**kwargs)

    def with_overrides(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def _convert(key: str, raw: str, base_dir: Optional[Path]):
    default = next(f for f in dataclasses.fields(RunConfig) if f.name == key).default
    if key in _PATH_KEYS:
        p = Path(raw).expanduser()
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        return p
    try:
        if isinstance(default, bool):
            return _BOOL_WORDS[raw.strip().lower()]
        if isinstance(default, int):
            return int(raw)
        return float(raw)
    except (KeyError, ValueError):
        raise ConfigError(f"{key}: cannot interpret {raw!r} as {type(default).__name__}") from None


def parse_config_text(text: str, base_dir: Optional[Path] = None) -> RunConfig:
    values: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    return RunConfig.from_dict(values, base_dir)


def load_config(path, require_data: bool = True) -> RunConfig:
    """Read and validate a run configuration; referenced data files must exist."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"configuration file not found: {path}")
    cfg = parse_config_text(path.read_text(encoding="utf-8"), path.parent)
    if require_data:
        check_paths(cfg)
    return cfg


def check_paths(cfg: RunConfig) -> None:
    if cfg.train is None:
        raise ConfigError("configuration must name a train split")
    for key in ("train", "dev", "test"):
        p = getattr(cfg, key)
        if p is not None and not p.is_file():
            raise ConfigError(f"{key} file not found: {p}")
    if cfg.embeddings is not None and not cfg.embeddings.is_file():
        if not cfg.embedding_fallback:
            raise ConfigError(f"embeddings file not found: {cfg.embeddings}")
        logger.warning("embeddings file %s not found; using fallback vectors", cfg.embeddings)
    if cfg.embeddings is None and not cfg.embedding_fallback:
        raise ConfigError("no embeddings file configured and embedding_fallback is off")
