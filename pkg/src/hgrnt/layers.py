"""Neural building blocks: GRU cell, max-pooled sentence encoder,
bidirectional context GRU, bilinear tensor layer and logistic head.

Every function takes an optional :class:`~hgrnt.numcore.Graph`.  Parameter
records may hold raw arrays (recorded as constants on use) or nodes bound
with :func:`bind`; bind before training so gradients collect on one leaf
per array.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Any, Optional, Sequence, TypeVar

import numpy as np

from .numcore import DimensionError, EmptySequenceError, Graph, Node, Operand

__all__ = [
    "GruParams",
    "TensorLayerParams",
    "LogisticParams",
    "glorot_uniform",
    "bind",
    "gru_step",
    "encode_sentence",
    "context_bigru",
    "tensor_interact",
    "head_logit",
    "score_head",
]

P = TypeVar("P")


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


@dataclass
class GruParams:
    """Weights of one GRU cell.  ``w_*`` act on the input, ``u_*`` on the state."""

    w_z: Any
    w_r: Any
    w_h: Any
    u_z: Any
    u_r: Any
    u_h: Any
    b_z: Any
    b_r: Any
    b_h: Any

    def __post_init__(self):
        hidden, inp = np.shape(_value(self.w_z))
        for name in ("w_z", "w_r", "w_h"):
            if np.shape(_value(getattr(self, name))) != (hidden, inp):
                raise DimensionError(f"GruParams.{name} must be {(hidden, inp)}")
        for name in ("u_z", "u_r", "u_h"):
            if np.shape(_value(getattr(self, name))) != (hidden, hidden):
                raise DimensionError(f"GruParams.{name} must be {(hidden, hidden)}")
        for name in ("b_z", "b_r", "b_h"):
            if np.shape(_value(getattr(self, name))) != (hidden,):
                raise DimensionError(f"GruParams.{name} must be {(hidden,)}")

    @property
    def input_dim(self) -> int:
        return np.shape(_value(self.w_z))[1]

    @property
    def hidden_dim(self) -> int:
        return np.shape(_value(self.w_z))[0]

    @classmethod
    def zeros(cls, input_dim: int, hidden_dim: int) -> "GruParams":
        w = lambda: np.zeros((hidden_dim, input_dim))  # noqa: E731
        u = lambda: np.zeros((hidden_dim, hidden_dim))  # noqa: E731
        b = lambda: np.zeros(hidden_dim)  # noqa: E731
        return cls(w(), w(), w(), u(), u(), u(), b(), b(), b())

    @classmethod
    def init(cls, input_dim: int, hidden_dim: int, rng: np.random.Generator) -> "GruParams":
        w = lambda: glorot_uniform(rng, (hidden_dim, input_dim), input_dim, hidden_dim)  # noqa: E731
        u = lambda: glorot_uniform(rng, (hidden_dim, hidden_dim), hidden_dim, hidden_dim)  # noqa: E731
        b = lambda: np.zeros(hidden_dim)  # noqa: E731
        return cls(w(), w(), w(), u(), u(), u(), b(), b(), b())


@dataclass
class TensorLayerParams:
    """Stack of ``r`` bilinear slices, shape ``(r, question_dim, answer_dim)``."""

    m: Any

    def __post_init__(self):
        shape = np.shape(_value(self.m))
        if len(shape) != 3 or shape[0] < 1:
            raise DimensionError(f"tensor slices must be (r, dq, da) with r >= 1, got {shape}")

    @property
    def r(self) -> int:
        return np.shape(_value(self.m))[0]

    @classmethod
    def init(cls, r: int, dq: int, da: int, rng: np.random.Generator) -> "TensorLayerParams":
        return cls(glorot_uniform(rng, (r, dq, da), dq, da))


@dataclass
class LogisticParams:
    w: Any
    b: Any

    def __post_init__(self):
        if len(np.shape(_value(self.w))) != 1 or np.shape(_value(self.b)) not in ((), (1,)):
            raise DimensionError("logistic head needs a weight vector and a scalar bias")
        if not isinstance(self.b, Node):
            self.b = np.reshape(np.asarray(self.b, dtype=np.float64), (1,))

    @property
    def feature_width(self) -> int:
        return np.shape(_value(self.w))[0]

    @classmethod
    def init(cls, feature_width: int, rng: np.random.Generator) -> "LogisticParams":
        return cls(glorot_uniform(rng, (feature_width,), feature_width, 1), np.zeros(1))


def _value(x):
    return x.value if isinstance(x, Node) else x


def bind(g: Graph, params: P) -> P:
    """Copy of a parameter record with every array replaced by a leaf on ``g``."""
    return dataclasses.replace(
        params,
        **{f.name: g.leaf(getattr(params, f.name)) for f in dataclasses.fields(params)},
    )


def _graph(g: Optional[Graph]) -> Graph:
    return Graph() if g is None else g


def gru_step(x_t: Operand, h_prev: Operand, p: GruParams, g: Optional[Graph] = None) -> Node:
    """One GRU update, keeping ``z`` of the previous state.

    ``h_t = z * h_prev + (1 - z) * tanh(W_h x + U_h (r * h_prev) + b_h)``.
    """
    g = _graph(g)
    h_prev = g._node(h_prev)
    if np.shape(_value(x_t)) != (p.input_dim,) or h_prev.shape != (p.hidden_dim,):
        raise DimensionError(
            f"gru_step: x{np.shape(_value(x_t))} / h{h_prev.shape} do not fit a "
            f"{p.input_dim}->{p.hidden_dim} cell"
        )
    x_t = g._node(x_t)

    def gate(w, u, b, h):
        return g.add(g.add(g.matmul(w, x_t), g.matmul(u, h)), b)

    z = g.sigmoid(gate(p.w_z, p.u_z, p.b_z, h_prev))
    r = g.sigmoid(gate(p.w_r, p.u_r, p.b_r, h_prev))
    candidate = g.tanh(gate(p.w_h, p.u_h, p.b_h, g.hadamard(r, h_prev)))
    return g.affine_combine(z, h_prev, candidate)


def _run_gru(inputs: Sequence[Operand], p: GruParams, g: Graph) -> list:
    h = g.leaf(np.zeros(p.hidden_dim))
    states = []
    for x in inputs:
        h = gru_step(x, h, p, g)
        states.append(h)
    return states


def encode_sentence(tokens, p: GruParams, g: Optional[Graph] = None) -> Node:
    """GRU over token embeddings from a zero state, then max pooling over time.

    ``tokens`` is a ``T x embed`` matrix or a sequence of embedding vectors.
    """
    g = _graph(g)
    if len(tokens) == 0:
        raise EmptySequenceError("encode_sentence: sentence has no tokens")
    states = _run_gru(list(tokens), p, g)
    return g.max_over_time(g.stack(states))


def context_bigru(
    sentence_vecs: Sequence[Operand], fwd: GruParams, bwd: GruParams, g: Optional[Graph] = None
) -> list:
    """Per-sentence ``[forward state; backward state]`` over a paragraph."""
    g = _graph(g)
    vecs = list(sentence_vecs)
    if not vecs:
        raise EmptySequenceError("context_bigru: paragraph has no sentences")
    forward = _run_gru(vecs, fwd, g)
    backward = _run_gru(vecs[::-1], bwd, g)[::-1]
    return [g.concat([f, b]) for f, b in zip(forward, backward)]


def tensor_interact(
    v_q: Operand, h_s: Operand, tp: TensorLayerParams, g: Optional[Graph] = None
) -> Node:
    g = _graph(g)
    return g.sigmoid(g.bilinear(v_q, tp.m, h_s))


def head_logit(features: Operand, lp: LogisticParams, g: Optional[Graph] = None) -> Node:
    g = _graph(g)
    features = g._node(features)
    if features.shape != (lp.feature_width,):
        raise DimensionError(
            f"score_head: features{features.shape} vs weights ({lp.feature_width},)"
        )
    return g.add(g.inner(lp.w, features), lp.b)


def score_head(features: Operand, lp: LogisticParams, g: Optional[Graph] = None) -> Node:
    """Confidence in (0, 1) as a shape-(1,) node."""
    g = _graph(g)
    return g.sigmoid(head_logit(features, lp, g))
