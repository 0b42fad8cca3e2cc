"""Dense float64 arithmetic with a reverse-mode tape.

Values are plain ``numpy.ndarray`` objects (C order, float64).  A
:class:`Graph` records every operation applied to its :class:`Node` objects
and :func:`backward` replays the record in reverse to accumulate gradients.
A graph is meant to be built for a single example and thrown away.

Backward rules live in the module-level :data:`BACKWARD` registry keyed by
operation kind, so the gradient-check harness can be pointed at a
tampered rule.
"""

from __future__ import annotations

from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

__all__ = [
    "DimensionError",
    "EmptySequenceError",
    "ContractError",
    "EvaluationError",
    "Node",
    "Graph",
    "BACKWARD",
    "as_tensor",
    "stable_sigmoid",
    "log_sigmoid",
    "backward",
    "value_and_grad",
    "grad_check",
    "grad_check_report",
]


class DimensionError(ValueError):
    """Operand extents do not agree."""


class EmptySequenceError(ValueError):
    """A sequence-consuming operation received zero elements."""


class ContractError(ValueError):
    """A precondition other than shape agreement was violated."""


class EvaluationError(ArithmeticError):
    """A function under gradient check returned a non-finite value."""


ArrayLike = Union[np.ndarray, Sequence[float], float]


def as_tensor(x: ArrayLike) -> np.ndarray:
    """Return ``x`` as a C-contiguous float64 array (copying only if needed)."""
    return np.ascontiguousarray(x, dtype=np.float64)


def stable_sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def log_sigmoid(x: np.ndarray) -> np.ndarray:
    """``log(sigmoid(x))`` without overflow: ``-softplus(-x)``."""
    x = np.asarray(x, dtype=np.float64)
    return -(np.maximum(-x, 0.0) + np.log1p(np.exp(-np.abs(x))))


class Node:
    """One recorded value on a :class:`Graph`.

    ``inputs`` are indices of earlier nodes, so the node list is always in
    topological order.
    """

    __slots__ = ("graph", "index", "kind", "inputs", "value", "ctx")

    def __init__(self, graph, index, kind, inputs, value, ctx=None):
        self.graph = graph
        self.index = index
        self.kind = kind
        self.inputs = inputs
        self.value = value
        self.ctx = ctx

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def grad(self) -> Optional[np.ndarray]:
        return self.graph.grad(self)

    def __repr__(self) -> str:
        return f"Node({self.index}, {self.kind}, shape={self.value.shape})"


Operand = Union[Node, ArrayLike]


def _shape_error(op: str, a: Tuple[int, ...], b: Tuple[int, ...]) -> DimensionError:
    return DimensionError(f"{op}: incompatible shapes {a} and {b}")


class Graph:
    """Append-only operation tape.

    Every operation method accepts :class:`Node` objects or raw arrays; raw
    arrays are recorded as constant leaves.  Gradients are only kept for
    nodes reachable (backwards) from the node passed to :func:`backward`.
    """

    def __init__(self):
        self.nodes: list[Node] = []
        self._grads: Optional[list] = None

    def __len__(self) -> int:
        return len(self.nodes)

    def _record(self, kind: str, inputs: Tuple[int, ...], value: np.ndarray, ctx=None) -> Node:
        node = Node(self, len(self.nodes), kind, inputs, value, ctx)
        self.nodes.append(node)
        return node

    def _node(self, x: Operand) -> Node:
        if isinstance(x, Node):
            if x.graph is not self:
                raise ContractError("node belongs to a different graph")
            return x
        return self.leaf(x)

    def leaf(self, value: ArrayLike) -> Node:
        return self._record("leaf", (), as_tensor(value))

    def grad(self, node: Node) -> Optional[np.ndarray]:
        if self._grads is None:
            return None
        return self._grads[node.index]

    # -- linear algebra -------------------------------------------------

    def matmul(self, a: Operand, b: Operand) -> Node:
        """Matrix product ``a @ b``; ``b`` may be a vector."""
        a, b = self._node(a), self._node(b)
        if a.value.ndim != 2 or b.value.ndim not in (1, 2) or a.shape[1] != b.shape[0]:
            raise _shape_error("matmul", a.shape, b.shape)
        return self._record("matmul", (a.index, b.index), a.value @ b.value)

    def bilinear(self, x: Operand, m: Operand, y: Operand) -> Node:
        """``out[k] = x^T M[k] y`` for a stack of ``r`` slices ``M``."""
        x, m, y = self._node(x), self._node(m), self._node(y)
        if (
            x.value.ndim != 1
            or y.value.ndim != 1
            or m.value.ndim != 3
            or m.shape[1:] != (x.shape[0], y.shape[0])
        ):
            raise DimensionError(
                f"bilinear: x{x.shape}, M{m.shape}, y{y.shape} do not line up"
            )
        my = m.value @ y.value  # (r, d1)
        return self._record("bilinear", (x.index, m.index, y.index), my @ x.value, my)

    def inner(self, a: Operand, b: Operand) -> Node:
        a, b = self._node(a), self._node(b)
        if a.value.ndim != 1 or a.shape != b.shape:
            raise _shape_error("inner", a.shape, b.shape)
        return self._record("inner", (a.index, b.index), np.array([a.value @ b.value]))

    # -- elementwise ----------------------------------------------------

    def _binary(self, kind: str, a: Operand, b: Operand, fn) -> Node:
        a, b = self._node(a), self._node(b)
        if a.shape != b.shape:
            raise _shape_error(kind, a.shape, b.shape)
        return self._record(kind, (a.index, b.index), fn(a.value, b.value))

    def add(self, a: Operand, b: Operand) -> Node:
        return self._binary("add", a, b, np.add)

    def hadamard(self, a: Operand, b: Operand) -> Node:
        return self._binary("hadamard", a, b, np.multiply)

    def sigmoid(self, a: Operand) -> Node:
        a = self._node(a)
        return self._record("sigmoid", (a.index,), stable_sigmoid(a.value))

    def tanh(self, a: Operand) -> Node:
        a = self._node(a)
        return self._record("tanh", (a.index,), np.tanh(a.value))

    def affine_combine(self, z: Operand, a: Operand, b: Operand) -> Node:
        """``z * a + (1 - z) * b`` elementwise."""
        z, a, b = self._node(z), self._node(a), self._node(b)
        if not (z.shape == a.shape == b.shape):
            raise DimensionError(
                f"affine_combine: shapes {z.shape}, {a.shape}, {b.shape} differ"
            )
        value = z.value * a.value + (1.0 - z.value) * b.value
        return self._record("affine_combine", (z.index, a.index, b.index), value)

    # -- structural -----------------------------------------------------

    def concat(self, parts: Sequence[Operand], axis: int = 0) -> Node:
        nodes = [self._node(p) for p in parts]
        if not nodes:
            raise EmptySequenceError("concat: no parts")
        if len(nodes) == 1:
            return nodes[0]
        ref = nodes[0].shape
        for n in nodes[1:]:
            if len(n.shape) != len(ref) or any(
                s != t for i, (s, t) in enumerate(zip(n.shape, ref)) if i != axis % len(ref)
            ):
                raise _shape_error("concat", ref, n.shape)
        value = np.concatenate([n.value for n in nodes], axis=axis)
        sizes = [n.shape[axis] for n in nodes]
        return self._record("concat", tuple(n.index for n in nodes), value, (axis, sizes))

    def stack(self, parts: Sequence[Operand]) -> Node:
        """Stack equal-shape vectors into rows of a new matrix."""
        nodes = [self._node(p) for p in parts]
        if not nodes:
            raise EmptySequenceError("stack: no parts")
        ref = nodes[0].shape
        for n in nodes[1:]:
            if n.shape != ref:
                raise _shape_error("stack", ref, n.shape)
        value = np.stack([n.value for n in nodes])
        return self._record("stack", tuple(n.index for n in nodes), value)

    def max_over_time(self, h: Operand) -> Node:
        """Column-wise maximum of a ``T x d`` matrix; ties go to the earliest row."""
        h = self._node(h)
        if h.value.ndim != 2:
            raise DimensionError(f"max_over_time: expected T x d, got {h.shape}")
        if h.shape[0] == 0:
            raise EmptySequenceError("max_over_time: empty sequence")
        winners = np.argmax(h.value, axis=0)  # first occurrence on ties
        value = h.value[winners, np.arange(h.shape[1])]
        return self._record("max_over_time", (h.index,), value, winners)

    def sum(self, a: Operand) -> Node:
        a = self._node(a)
        return self._record("sum", (a.index,), np.array(a.value.sum()))

    def logistic_nll(self, logits: Operand, labels: ArrayLike) -> Node:
        """Summed negative log-likelihood of 0/1 labels under ``sigmoid(logits)``."""
        logits = self._node(logits)
        y = as_tensor(labels)
        if y.shape != logits.shape:
            raise _shape_error("logistic_nll", logits.shape, y.shape)
        z = logits.value
        value = -(y * log_sigmoid(z) + (1.0 - y) * log_sigmoid(-z)).sum()
        return self._record("logistic_nll", (logits.index,), np.array(value), y)


# -- backward rules -------------------------------------------------------
#
# Each rule receives the node, the upstream gradient, and the graph's node
# list, and returns one gradient per input (in input order).

BackwardRule = Callable[[Node, np.ndarray, list], Tuple[np.ndarray, ...]]


def _bw_matmul(node, g, nodes):
    a, b = nodes[node.inputs[0]].value, nodes[node.inputs[1]].value
    if b.ndim == 1:
        return np.outer(g, b), a.T @ g
    return g @ b.T, a.T @ g


def _bw_bilinear(node, g, nodes):
    x, m, y = (nodes[i].value for i in node.inputs)
    my = node.ctx
    dx = g @ my
    dm = g[:, None, None] * np.outer(x, y)[None, :, :]
    dy = (g @ np.tensordot(x, m, axes=([0], [1])))  # x^T M[k] summed with g
    return dx, dm, dy


def _bw_inner(node, g, nodes):
    a, b = nodes[node.inputs[0]].value, nodes[node.inputs[1]].value
    return g[0] * b, g[0] * a


def _bw_add(node, g, nodes):
    return g, g


def _bw_hadamard(node, g, nodes):
    a, b = nodes[node.inputs[0]].value, nodes[node.inputs[1]].value
    return g * b, g * a


def _bw_sigmoid(node, g, nodes):
    s = node.value
    return (g * s * (1.0 - s),)


def _bw_tanh(node, g, nodes):
    t = node.value
    return (g * (1.0 - t * t),)


def _bw_affine_combine(node, g, nodes):
    z, a, b = (nodes[i].value for i in node.inputs)
    return g * (a - b), g * z, g * (1.0 - z)


def _bw_concat(node, g, nodes):
    axis, sizes = node.ctx
    cuts = np.cumsum(sizes)[:-1]
    return tuple(np.split(g, cuts, axis=axis))


def _bw_stack(node, g, nodes):
    return tuple(g[i] for i in range(g.shape[0]))


def _bw_max_over_time(node, g, nodes):
    h = nodes[node.inputs[0]].value
    dh = np.zeros_like(h)
    dh[node.ctx, np.arange(h.shape[1])] = g
    return (dh,)


def _bw_sum(node, g, nodes):
    return (np.full(nodes[node.inputs[0]].shape, float(g)),)


def _bw_logistic_nll(node, g, nodes):
    z = nodes[node.inputs[0]].value
    return (float(g) * (stable_sigmoid(z) - node.ctx),)


BACKWARD: Dict[str, BackwardRule] = {
    "matmul": _bw_matmul,
    "bilinear": _bw_bilinear,
    "inner": _bw_inner,
    "add": _bw_add,
    "hadamard": _bw_hadamard,
    "sigmoid": _bw_sigmoid,
    "tanh": _bw_tanh,
    "affine_combine": _bw_affine_combine,
    "concat": _bw_concat,
    "stack": _bw_stack,
    "max_over_time": _bw_max_over_time,
    "sum": _bw_sum,
    "logistic_nll": _bw_logistic_nll,
}


def backward(graph: Graph, loss: Node) -> None:
    """Fill gradient slots of every ancestor of the scalar ``loss`` node."""
    if loss.graph is not graph:
        raise ContractError("loss node belongs to a different graph")
    if loss.value.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    nodes = graph.nodes
    grads: list = [None] * len(nodes)
    grads[loss.index] = np.ones_like(loss.value)
    for idx in range(loss.index, -1, -1):
        g = grads[idx]
        if g is None:
            continue
        node = nodes[idx]
        if not node.inputs:
            continue
        contribs = BACKWARD[node.kind](node, g, nodes)
        for i, c in zip(node.inputs, contribs):
            if grads[i] is None:
                grads[i] = np.array(c, dtype=np.float64, copy=True)
            else:
                grads[i] += c
    graph._grads = grads


def value_and_grad(
    build: Callable[[Graph, Dict[str, Node]], Node], params: Mapping[str, np.ndarray]
) -> Tuple[float, Dict[str, np.ndarray]]:
    """Evaluate ``build`` on fresh leaves for ``params`` and return loss and gradients.

    Parameters that do not influence the loss get an all-zero gradient.
    """
    g = Graph()
    leaves = {name: g.leaf(value) for name, value in params.items()}
    loss = build(g, leaves)
    backward(g, loss)
    grads = {}
    for name, leaf in leaves.items():
        gr = g.grad(leaf)
        grads[name] = np.zeros_like(leaf.value) if gr is None else gr
    return float(loss.value), grads


ScalarFn = Callable[[Dict[str, np.ndarray]], Tuple[float, Dict[str, np.ndarray]]]


def grad_check_report(
    f: ScalarFn, params: Mapping[str, ArrayLike], eps: float = 1e-5
) -> Dict[str, Tuple[float, Tuple[int, ...]]]:
    """Per-parameter worst relative error and the coordinate where it occurs.

    ``f`` maps a parameter dict to ``(value, analytic_gradients)``.  Each
    coordinate is compared against a central difference with step ``eps``
    using ``|a - n| / max(1e-8, |a| + |n|)``.
    """
    if not eps > 0:
        raise ContractError(f"eps must be positive, got {eps}")
    base = {k: as_tensor(v).copy() for k, v in params.items()}
    value, analytic = f(base)
    if not np.isfinite(value):
        raise EvaluationError(f"function value is not finite: {value}")

    def evaluate(p):
        v = f(p)[0]
        if not np.isfinite(v):
            raise EvaluationError(f"function value is not finite: {v}")
        return v

    report = {}
    for name, arr in base.items():
        worst, where = 0.0, ()
        a_grad = np.broadcast_to(analytic[name], arr.shape)
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + eps
            f_plus = evaluate(base)
            arr[idx] = orig - eps
            f_minus = evaluate(base)
            arr[idx] = orig
            numeric = (f_plus - f_minus) / (2.0 * eps)
            a = float(a_grad[idx])
            err = abs(a - numeric) / max(1e-8, abs(a) + abs(numeric))
            if err > worst or not where:
                worst, where = err, idx
        report[name] = (worst, where)
    return report


def grad_check(f: ScalarFn, params: Mapping[str, ArrayLike], eps: float = 1e-5) -> float:
    """Maximum relative error between analytic and central-difference gradients."""
    report = grad_check_report(f, params, eps)
    return max((err for err, _ in report.values()), default=0.0)

