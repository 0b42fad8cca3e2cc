"""Checkpoint files.

Layout::

    HGRNT-CHECKPOINT <version>\\n
    <one line of JSON: run config, model config, threshold, dev F,
     vocabulary, block table>\\n
    <blocks: row-major little-endian float64, in block-table order>

Writing is deterministic, so save -> load -> save reproduces the file
byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from .config import RunConfig
from .data import EmbeddingTable
from .estimator import AnswerTrigger
from .model import ModelConfig, ModelParams

MAGIC = b"HGRNT-CHECKPOINT"
FORMAT_VERSION = 1
_EMBEDDINGS = "embeddings.matrix"


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    run_config: RunConfig
    model_config: ModelConfig
    params: ModelParams
    embeddings: EmbeddingTable
    threshold: float
    best_dev_f: Optional[float] = None

    @classmethod
    def from_estimator(cls, est: AnswerTrigger, run_config: RunConfig) -> "Checkpoint":
        return cls(
            run_config, est.config_, est.params_, est.embeddings_, float(est.threshold_), est.best_dev_f_
        )

    def to_estimator(self) -> AnswerTrigger:
        mc = self.model_config
        est = AnswerTrigger(
            embeddings=self.embeddings,
            embed_dim=mc.embed_dim,
            sent_hidden=mc.sent_hidden,
            ctx_hidden=mc.ctx_hidden,
            r=mc.r,
            use_context=mc.use_context,
            use_tensor=mc.use_tensor,
            seed=mc.seed,
        )
        est.embeddings_ = self.embeddings
        est.config_ = mc
        est.params_ = self.params
        est.threshold_ = self.threshold
        est.best_dev_f_ = self.best_dev_f
        est.loss_curve_, est.dev_log_, est.best_epoch_ = [], [], 0
        return est


def _blocks(ckpt: Checkpoint) -> Dict[str, np.ndarray]:
    blocks = dict(ckpt.params.named_arrays())
    blocks[_EMBEDDINGS] = ckpt.embeddings.matrix
    return blocks


def dumps(ckpt: Checkpoint) -> bytes:
    vocab = sorted(ckpt.embeddings.vocabulary.items(), key=lambda kv: (kv[1], kv[0]))
    blocks = _blocks(ckpt)
    header = {
        "run_config": ckpt.run_config.to_dict(),
        "model_config": asdict(ckpt.model_config),
        "threshold": ckpt.threshold,
        "best_dev_f": ckpt.best_dev_f,
        "vocabulary": [[w, i] for w, i in vocab],
        "blocks": [{"name": k, "shape": list(v.shape)} for k, v in blocks.items()],
    }
    out = [
        MAGIC + b" " + str(FORMAT_VERSION).encode() + b"\n",
        json.dumps(header, sort_keys=True, ensure_ascii=False, separators=(",", ":")).encode("utf-8"),
        b"\n",
    ]
    for arr in blocks.values():
        out.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return b"".join(out)


def loads(raw: bytes) -> Checkpoint:
    first, sep, rest = raw.partition(b"\n")
    parts = first.split(b" ")
    if not sep or len(parts) != 2 or parts[0] != MAGIC:
        raise CheckpointError("not a checkpoint file")
    if parts[1] != str(FORMAT_VERSION).encode():
        raise CheckpointError(
            f"checkpoint format version {parts[1].decode(errors='replace')} is not supported "
            f"(expected {FORMAT_VERSION})"
        )
    line, sep, payload = rest.partition(b"\n")
    try:
        header = json.loads(line.decode("utf-8"))
    except ValueError as exc:
        raise CheckpointError(f"corrupt checkpoint header: {exc}") from None
    arrays = {}
    offset = 0
    for block in header["blocks"]:
        shape = tuple(block["shape"])
        n = int(np.prod(shape, dtype=np.int64)) * 8
        if offset + n > len(payload):
            raise CheckpointError(f"checkpoint truncated inside block {block['name']!r}")
        arrays[block["name"]] = (
            np.frombuffer(payload, dtype="<f8", count=n // 8, offset=offset).astype(np.float64).reshape(shape)
        )
        offset += n
    if offset != len(payload):
        raise CheckpointError("trailing bytes after the last checkpoint block")
    matrix = arrays.pop(_EMBEDDINGS)
    vocab = {w: int(i) for w, i in header["vocabulary"]}
    model_config = ModelConfig(**header["model_config"])
    return Checkpoint(
        RunConfig.from_dict(header["run_config"]),
        model_config,
        ModelParams.from_named(model_config, arrays),
        EmbeddingTable(vocab, np.ascontiguousarray(matrix)),
        float(header["threshold"]),
        header["best_dev_f"],
    )


def save_checkpoint(ckpt: Checkpoint, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(dumps(ckpt))
    tmp.replace(path)
    return path


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    return loads(path.read_bytes())
