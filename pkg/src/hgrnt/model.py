"""The full hierarchical model: shared max-pooled GRU sentence encoder,
optional bidirectional context GRU across the paragraph, optional bilinear
tensor interaction with the question, and a logistic scoring head.

``use_context`` and ``use_tensor`` switch between the four ablation
variants.  Without the tensor layer the head sees ``[v_q; h_s]``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import layers
from .data import EmbeddedQuestion
from .layers import GruParams, LogisticParams, TensorLayerParams
from .metrics import DEFAULT_GRID, decide, sweep_threshold
from .numcore import ContractError, EmptySequenceError, Graph, Node, backward
from .optim import AdamHyper, AdamState, adam_step

logger = logging.getLogger(__name__)

__all__ = [
    "ModelConfig",
    "ModelParams",
    "TrainingDivergedError",
    "TrainResult",
    "forward",
    "forward_logits",
    "score_paragraph",
    "paragraph_loss",
    "example_value_and_grad",
    "score_questions",
    "loss",
    "decide",
    "train",
    "clip_global_norm",
]


class TrainingDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    embed_dim: int = 100
    sent_hidden: int = 128
    ctx_hidden: int = 128
    r: int = 4
    use_context: bool = True
    use_tensor: bool = True
    threshold: float = 0.5
    seed: int = 42

    def __post_init__(self):
        for name in ("embed_dim", "sent_hidden", "ctx_hidden", "r"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ContractError(f"{name} must be a positive integer, got {value!r}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ContractError(f"threshold must lie in [0, 1], got {self.threshold}")

    @property
    def question_width(self) -> int:
        return self.sent_hidden

    @property
    def answer_width(self) -> int:
        return 2 * self.ctx_hidden if self.use_context else self.sent_hidden

    @property
    def feature_width(self) -> int:
        return self.r if self.use_tensor else self.question_width + self.answer_width


@dataclass
class ModelParams:
    encoder: GruParams
    head: LogisticParams
    context_fwd: Optional[GruParams] = None
    context_bwd: Optional[GruParams] = None
    tensor: Optional[TensorLayerParams] = None

    @classmethod
    def init(cls, config: ModelConfig, rng: Optional[np.random.Generator] = None) -> "ModelParams":
        rng = np.random.default_rng(config.seed) if rng is None else rng
        encoder = GruParams.init(config.embed_dim, config.sent_hidden, rng)
        fwd = bwd = tensor = None
        if config.use_context:
            fwd = GruParams.init(config.sent_hidden, config.ctx_hidden, rng)
            bwd = GruParams.init(config.sent_hidden, config.ctx_hidden, rng)
        if config.use_tensor:
            tensor = TensorLayerParams.init(
                config.r, config.question_width, config.answer_width, rng
            )
        head = LogisticParams.init(config.feature_width, rng)
        return cls(encoder, head, fwd, bwd, tensor)

    def _blocks(self):
        for prefix in ("encoder", "context_fwd", "context_bwd", "tensor", "head"):
            block = getattr(self, prefix)
            if block is not None:
                yield prefix, block

    def named_arrays(self) -> Dict[str, np.ndarray]:
        """Live references to every trainable array, keyed ``block.field``."""
        out = {}
        for prefix, block in self._blocks():
            for name, value in vars(block).items():
                out[f"{prefix}.{name}"] = value
        return out

    @classmethod
    def from_named(cls, config: ModelConfig, arrays: Dict[str, np.ndarray]) -> "ModelParams":
        template = cls.init(config, np.random.default_rng(0))
        expected = template.named_arrays()
        if set(arrays) != set(expected):
            missing = sorted(set(expected) - set(arrays))
            extra = sorted(set(arrays) - set(expected))
            raise ContractError(f"parameter names disagree with config: missing {missing}, extra {extra}")
        for key, ref in expected.items():
            if np.shape(arrays[key]) != ref.shape:
                raise ContractError(f"{key}: shape {np.shape(arrays[key])}, config expects {ref.shape}")
        kwargs = {}
        for prefix, block in template._blocks():
            values = {
                name: np.array(arrays[f"{prefix}.{name}"], dtype=np.float64)
                for name in vars(block)
            }
            kwargs[prefix] = type(block)(**values)
        return cls(**kwargs)

    def copy(self) -> "ModelParams":
        kwargs = {p: type(b)(**{k: np.copy(v) for k, v in vars(b).items()}) for p, b in self._blocks()}
        return ModelParams(**kwargs)

    def bind(self, g: Graph) -> Tuple["ModelParams", Dict[str, Node]]:
        """Bound copy on ``g`` plus the leaf node for every named array."""
        kwargs = {p: layers.bind(g, b) for p, b in self._blocks()}
        bound = ModelParams(**kwargs)
        return bound, bound.named_arrays()


def _check_inputs(question, candidates, config: ModelConfig):
    if len(candidates) == 0:
        raise EmptySequenceError("forward: paragraph has no candidate sentences")
    for tokens in [question, *candidates]:
        if np.shape(tokens)[-1] != config.embed_dim:
            raise ContractError(
                f"token embeddings have width {np.shape(tokens)[-1]}, config says {config.embed_dim}"
            )


def forward_logits(
    question, candidates: Sequence, params: ModelParams, config: ModelConfig, g: Optional[Graph] = None
) -> List[Node]:
    """Pre-sigmoid score for every candidate, in paragraph order."""
    _check_inputs(question, candidates, config)
    g = Graph() if g is None else g
    v_q = layers.encode_sentence(question, params.encoder, g)
    v_s = [layers.encode_sentence(c, params.encoder, g) for c in candidates]
    if config.use_context:
        h_s = layers.context_bigru(v_s, params.context_fwd, params.context_bwd, g)
    else:
        h_s = v_s
    logits = []
    for h in h_s:
        if config.use_tensor:
            features = layers.tensor_interact(v_q, h, params.tensor, g)
        else:
            features = g.concat([v_q, h])
        logits.append(layers.head_logit(features, params.head, g))
    return logits


def forward(
    question, candidates: Sequence, params: ModelParams, config: ModelConfig, g: Optional[Graph] = None
) -> List[Node]:
    """Confidence in (0, 1) for every candidate, in paragraph order."""
    g = Graph() if g is None else g
    return [g.sigmoid(z) for z in forward_logits(question, candidates, params, config, g)]


def score_paragraph(
    question, candidates: Sequence, params: ModelParams, config: ModelConfig
) -> np.ndarray:
    return np.array([float(s.value[0]) for s in forward(question, candidates, params, config)])


def paragraph_loss(g: Graph, logits: Sequence[Node], labels) -> Node:
    """Summed per-sentence log loss, evaluated on logits for stability."""
    labels = np.asarray(labels, dtype=np.float64).reshape(-1)
    if len(logits) != labels.size:
        raise ContractError(f"{len(logits)} scores for {labels.size} labels")
    return g.logistic_nll(g.concat(list(logits)), labels)


def loss(scores: Sequence[float], labels: Sequence[int]) -> float:
    """``-sum(y log s + (1 - y) log(1 - s))`` over a paragraph's sentences."""
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if s.shape != y.shape:
        raise ContractError(f"{s.size} scores for {y.size} labels")
    return float(-(y * np.log(s) + (1.0 - y) * np.log1p(-s)).sum())


def example_value_and_grad(
    example: EmbeddedQuestion, params: ModelParams, config: ModelConfig
) -> Tuple[float, Dict[str, np.ndarray]]:
    g = Graph()
    bound, leaves = params.bind(g)
    logits = forward_logits(example.question, example.candidates, bound, config, g)
    total = paragraph_loss(g, logits, example.labels)
    backward(g, total)
    grads = {}
    for name, leaf in leaves.items():
        gr = g.grad(leaf)
        grads[name] = np.zeros_like(leaf.value) if gr is None else gr
    return float(total.value), grads


def clip_global_norm(grads: Dict[str, np.ndarray], max_norm: float) -> float:
    """Rescale ``grads`` in place so their joint L2 norm is at most ``max_norm``."""
    norm = float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))
    if max_norm and norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


@dataclass
class TrainResult:
    params: ModelParams
    loss_log: List[float]
    dev_log: List[Tuple[int, float, float, float, float]] = field(default_factory=list)
    threshold: float = 0.5
    best_dev_f: Optional[float] = None
    best_epoch: int = 0


def score_questions(
    examples: Sequence[EmbeddedQuestion], params: ModelParams, config: ModelConfig
) -> List[np.ndarray]:
    return [score_paragraph(e.question, e.candidates, params, config) for e in examples]


def train(
    dataset: Sequence[EmbeddedQuestion],
    config: ModelConfig,
    hyper: AdamHyper = AdamHyper(),
    epochs: int = 50,
    dev: Optional[Sequence[EmbeddedQuestion]] = None,
    patience: int = 5,
    clip_norm: Optional[float] = 5.0,
    params: Optional[ModelParams] = None,
    grid: Sequence[float] = DEFAULT_GRID,
    on_epoch: Optional[Callable[[int, float, Optional[object]], None]] = None,
) -> TrainResult:
    """Adam over whole paragraphs, one question per update.

    With a ``dev`` split, the dev-optimal threshold and F are tracked after
    every epoch (epoch 0 being the initial parameters); training stops once
    F has not improved for ``patience`` epochs and the best parameters are
    returned.
    """
    if len(dataset) == 0:
        raise ContractError("training set is empty")
    rng = np.random.default_rng(config.seed)
    params = ModelParams.init(config, rng) if params is None else params
    arrays = params.named_arrays()
    state = AdamState.zeros_like(arrays)
    result = TrainResult(params, [], threshold=config.threshold)

    def evaluate(epoch, train_loss):
        if dev is None:
            return None
        scores = score_questions(dev, params, config)
        t, report, _ = sweep_threshold(scores, [e.labels for e in dev], grid)
        result.dev_log.append((epoch, train_loss, report.precision, report.recall, report.f1))
        return t, report

    best = evaluate(0, float("nan"))
    best_params = params.copy()
    if best is not None:
        result.threshold, result.best_dev_f = best[0], best[1].f1
        if on_epoch is not None:
            on_epoch(0, float("nan"), best)
    stale = 0
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(dataset))
        total = 0.0
        for i in order:
            example = dataset[i]
            value, grads = example_value_and_grad(example, params, config)
            if not np.isfinite(value):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, question {example.question_id!r}"
                )
            if clip_norm:
                clip_global_norm(grads, clip_norm)
            adam_step(arrays, grads, state, hyper)
            total += value
        mean_loss = total / len(dataset)
        result.loss_log.append(mean_loss)
        current = evaluate(epoch, mean_loss)
        if on_epoch is not None:
            on_epoch(epoch, mean_loss, current)
        if current is None:
            logger.info("epoch %d loss %.6f", epoch, mean_loss)
            continue
        logger.info(
            "epoch %d loss %.6f dev P %.2f R %.2f F %.2f",
            epoch, mean_loss, current[1].precision, current[1].recall, current[1].f1,
        )
        if current[1].f1 > result.best_dev_f:
            result.threshold, result.best_dev_f, result.best_epoch = current[0], current[1].f1, epoch
            best_params = params.copy()
            stale = 0
        else:
            stale += 1
            if stale >= patience:
                break
    result.params = best_params if dev is not None else params
    return result
