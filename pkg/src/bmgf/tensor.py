"""Minimal reverse-mode automatic differentiation on top of numpy.

Every primitive computes its forward value eagerly and, when at least one
input requires a gradient, records itself as a node (op kind, inputs, saved
context).  ``backward`` walks the recorded graph in reverse topological
order and dispatches on the op kind through ``BACKWARD_RULES``; the table is
looked up at call time so tests can swap a rule for a broken one.

All data is float64.
"""

from __future__ import annotations

import os
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ContractError, DimensionError

DEBUG = bool(os.environ.get("BMGF_DEBUG"))

BACKWARD_RULES: dict[str, Callable] = {}


def _rule(kind: str):
    def register(fn):
        BACKWARD_RULES[kind] = fn
        return fn

    return register


class Tensor:
    """Dense float64 array with an optional gradient buffer."""

    __slots__ = ("data", "grad", "requires_grad", "op", "inputs", "ctx", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = np.zeros_like(self.data) if requires_grad else None
        self.op: str | None = None
        self.inputs: tuple[Tensor, ...] = ()
        self.ctx: dict = {}
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad = np.zeros_like(self.data)

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        tag = f", op={self.op}" if self.op else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{tag})"

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(kind: str, value: np.ndarray, inputs: Sequence[Tensor], **ctx) -> Tensor:
    if DEBUG and not np.all(np.isfinite(value)):
        if all(np.all(np.isfinite(t.data)) for t in inputs):
            raise FloatingPointError(f"{kind}: non-finite output from finite inputs")
    out = Tensor.__new__(Tensor)
    out.data = value if value.dtype == np.float64 else value.astype(np.float64)
    out.name = None
    if any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out.op = kind
        out.inputs = tuple(inputs)
        out.ctx = ctx
    else:
        out.requires_grad = False
        out.op = None
        out.inputs = ()
        out.ctx = {}
    out.grad = None
    return out


def _broadcast(kind: str, *shapes) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(*shapes)
    except ValueError:
        raise DimensionError(f"{kind}: cannot broadcast shapes {list(shapes)}") from None


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# Graph and backward


class Graph:
    """Topologically ordered op records reachable from an output tensor."""

    def __init__(self, nodes: list[Tensor]):
        self.nodes = nodes

    @classmethod
    def build(cls, output: Tensor) -> "Graph":
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(output, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node.inputs:
                if id(parent) not in seen and parent.requires_grad:
                    stack.append((parent, False))
        return cls(order)

    def __len__(self) -> int:
        return len(self.nodes)

    def leaves(self) -> list[Tensor]:
        return [n for n in self.nodes if n.op is None]


def backward(loss: Tensor, graph: Graph | None = None) -> None:
    """Accumulate d(loss)/d(leaf) into ``.grad`` of every leaf requiring grad."""
    if loss.size != 1:
        raise ContractError(f"backward: loss must be a scalar, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    graph = graph or Graph.build(loss)
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(graph.nodes):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.op is None:
            if node.grad is None:
                node.grad = np.zeros_like(node.data)
            node.grad += g
            continue
        in_grads = BACKWARD_RULES[node.op](node, g)
        for parent, pg in zip(node.inputs, in_grads):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg


# ---------------------------------------------------------------------------
# Elementwise arithmetic


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast("add", a.shape, b.shape)
    return _make("add", a.data + b.data, (a, b))


@_rule("add")
def _add_back(node, g):
    a, b = node.inputs
    return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast("sub", a.shape, b.shape)
    return _make("sub", a.data - b.data, (a, b))


@_rule("sub")
def _sub_back(node, g):
    a, b = node.inputs
    return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast("mul", a.shape, b.shape)
    return _make("mul", a.data * b.data, (a, b))


@_rule("mul")
def _mul_back(node, g):
    a, b = node.inputs
    ga = _unbroadcast(g * b.data, a.shape) if a.requires_grad else None
    gb = _unbroadcast(g * a.data, b.shape) if b.requires_grad else None
    return ga, gb


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast("div", a.shape, b.shape)
    return _make("div", a.data / b.data, (a, b))


@_rule("div")
def _div_back(node, g):
    a, b = node.inputs
    ga = _unbroadcast(g / b.data, a.shape) if a.requires_grad else None
    gb = _unbroadcast(-g * a.data / (b.data * b.data), b.shape) if b.requires_grad else None
    return ga, gb


def safe_div(a, b) -> Tensor:
    """a / b with the quotient (and its gradients) defined as 0 where b == 0."""
    a, b = as_tensor(a), as_tensor(b)
    _broadcast("safe_div", a.shape, b.shape)
    zero = b.data == 0
    denom = np.where(zero, 1.0, b.data)
    out = np.where(zero, 0.0, a.data / denom)
    return _make("safe_div", out, (a, b), zero=zero, denom=denom)


@_rule("safe_div")
def _safe_div_back(node, g):
    a, b = node.inputs
    zero, denom = node.ctx["zero"], node.ctx["denom"]
    ga = gb = None
    if a.requires_grad:
        ga = _unbroadcast(np.where(zero, 0.0, g / denom), a.shape)
    if b.requires_grad:
        gb = _unbroadcast(np.where(zero, 0.0, -g * a.data / (denom * denom)), b.shape)
    return ga, gb


def neg(a) -> Tensor:
    a = as_tensor(a)
    return _make("neg", -a.data, (a,))


@_rule("neg")
def _neg_back(node, g):
    return (-g,)


def maximum(a, b) -> Tensor:
    """Elementwise max; ties send the gradient to ``a``."""
    a, b = as_tensor(a), as_tensor(b)
    _broadcast("maximum", a.shape, b.shape)
    pick_a = a.data >= b.data
    return _make("maximum", np.where(pick_a, a.data, b.data), (a, b), pick_a=pick_a)


@_rule("maximum")
def _maximum_back(node, g):
    a, b = node.inputs
    pick_a = node.ctx["pick_a"]
    return _unbroadcast(g * pick_a, a.shape), _unbroadcast(g * ~pick_a, b.shape)


def where(cond, a, b) -> Tensor:
    """Select from ``a`` where the (non-differentiable) boolean ``cond`` holds."""
    cond = np.asarray(cond, dtype=bool)
    a, b = as_tensor(a), as_tensor(b)
    _broadcast("where", cond.shape, a.shape, b.shape)
    return _make("where", np.where(cond, a.data, b.data), (a, b), cond=cond)


@_rule("where")
def _where_back(node, g):
    a, b = node.inputs
    cond = node.ctx["cond"]
    return _unbroadcast(np.where(cond, g, 0.0), a.shape), _unbroadcast(np.where(cond, 0.0, g), b.shape)


# ---------------------------------------------------------------------------
# Unary nonlinearities


def exp(a) -> Tensor:
    a = as_tensor(a)
    return _make("exp", np.exp(a.data), (a,))


@_rule("exp")
def _exp_back(node, g):
    return (g * np.exp(node.inputs[0].data),)


def log(a) -> Tensor:
    a = as_tensor(a)
    return _make("log", np.log(a.data), (a,))


@_rule("log")
def _log_back(node, g):
    return (g / node.inputs[0].data,)


def sqrt(a) -> Tensor:
    """Square root whose derivative at 0 is taken as 0 (not infinity)."""
    a = as_tensor(a)
    if np.any(a.data < 0):
        raise ContractError("sqrt: negative input")
    return _make("sqrt", np.sqrt(a.data), (a,))


@_rule("sqrt")
def _sqrt_back(node, g):
    out = np.sqrt(node.inputs[0].data)
    pos = out > 0
    return (np.where(pos, g / (2.0 * np.where(pos, out, 1.0)), 0.0),)


def relu(a) -> Tensor:
    a = as_tensor(a)
    return _make("relu", np.maximum(a.data, 0.0), (a,))


@_rule("relu")
def _relu_back(node, g):
    return (g * (node.inputs[0].data > 0),)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    return _make("sigmoid", _sigmoid(a.data), (a,))


@_rule("sigmoid")
def _sigmoid_back(node, g):
    s = _sigmoid(node.inputs[0].data)
    return (g * s * (1.0 - s),)


def tanh(a) -> Tensor:
    a = as_tensor(a)
    return _make("tanh", np.tanh(a.data), (a,))


@_rule("tanh")
def _tanh_back(node, g):
    t = np.tanh(node.inputs[0].data)
    return (g * (1.0 - t * t),)


# ---------------------------------------------------------------------------
# Linear algebra and shape manipulation


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(f"matmul: operands must be at least 2-D, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul: inner dimensions differ for {a.shape} @ {b.shape}")
    _broadcast("matmul", a.shape[:-2], b.shape[:-2])
    return _make("matmul", a.data @ b.data, (a, b))


@_rule("matmul")
def _matmul_back(node, g):
    a, b = node.inputs
    ga = _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape) if a.requires_grad else None
    gb = _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape) if b.requires_grad else None
    return ga, gb


def sum_(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    return _make("sum", np.asarray(a.data.sum(axis=axis, keepdims=keepdims)), (a,), axis=axis, keepdims=keepdims)


@_rule("sum")
def _sum_back(node, g):
    a = node.inputs[0]
    axis, keepdims = node.ctx["axis"], node.ctx["keepdims"]
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return (np.broadcast_to(g, a.shape).copy(),)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    count = a.size if axis is None else int(np.prod([a.shape[i] for i in np.atleast_1d(axis)]))
    return sum_(a, axis=axis, keepdims=keepdims) * (1.0 / count)


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    try:
        value = a.data.reshape(shape)
    except ValueError:
        raise DimensionError(f"reshape: cannot reshape {a.shape} into {tuple(shape)}") from None
    return _make("reshape", value, (a,))


@_rule("reshape")
def _reshape_back(node, g):
    return (g.reshape(node.inputs[0].shape),)


def transpose(a, axes=None) -> Tensor:
    a = as_tensor(a)
    axes = tuple(axes) if axes is not None else tuple(reversed(range(a.ndim)))
    if sorted(axes) != list(range(a.ndim)):
        raise DimensionError(f"transpose: axes {axes} invalid for shape {a.shape}")
    return _make("transpose", np.transpose(a.data, axes), (a,), axes=axes)


@_rule("transpose")
def _transpose_back(node, g):
    return (np.transpose(g, np.argsort(node.ctx["axes"])),)


def getitem(a, index) -> Tensor:
    """Basic or advanced indexing; repeated indices accumulate in backward."""
    a = as_tensor(a)
    try:
        value = a.data[index]
    except IndexError as exc:
        raise DimensionError(f"getitem: {exc} for shape {a.shape}") from None
    return _make("getitem", np.array(value, dtype=np.float64), (a,), index=index)


@_rule("getitem")
def _getitem_back(node, g):
    a = node.inputs[0]
    out = np.zeros_like(a.data)
    np.add.at(out, node.ctx["index"], g)
    return (out,)


def concat(tensors: Sequence, axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    try:
        value = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise DimensionError(f"concat: incompatible shapes {[t.shape for t in tensors]} on axis {axis}") from None
    sizes = [t.shape[axis] for t in tensors]
    return _make("concat", value, tensors, axis=axis, sizes=sizes)


@_rule("concat")
def _concat_back(node, g):
    cuts = np.cumsum(node.ctx["sizes"])[:-1]
    return tuple(np.split(g, cuts, axis=node.ctx["axis"]))


def split(a, sizes: Sequence[int], axis: int = -1) -> list[Tensor]:
    a = as_tensor(a)
    if sum(sizes) != a.shape[axis]:
        raise DimensionError(f"split: sizes {list(sizes)} do not cover axis of length {a.shape[axis]}")
    out, start = [], 0
    for size in sizes:
        index = [slice(None)] * a.ndim
        index[axis] = slice(start, start + size)
        out.append(getitem(a, tuple(index)))
        start += size
    return out


# ---------------------------------------------------------------------------
# Reductions with masks


def softmax(a, axis: int = -1, mask=None) -> Tensor:
    """Softmax along ``axis``; entries where ``mask`` is False get exactly 0."""
    a = as_tensor(a)
    x = a.data
    if mask is not None:
        mask = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
        x = np.where(mask, x, -np.inf)
    peak = np.max(x, axis=axis, keepdims=True)
    peak = np.where(np.isfinite(peak), peak, 0.0)
    e = np.exp(x - peak)
    total = e.sum(axis=axis, keepdims=True)
    y = e / np.where(total > 0, total, 1.0)
    return _make("softmax", y, (a,), y=y, axis=axis)


@_rule("softmax")
def _softmax_back(node, g):
    y, axis = node.ctx["y"], node.ctx["axis"]
    return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)


def log_softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    return _make("log_softmax", out, (a,), axis=axis, out=out)


@_rule("log_softmax")
def _log_softmax_back(node, g):
    axis, out = node.ctx["axis"], node.ctx["out"]
    return (g - np.exp(out) * g.sum(axis=axis, keepdims=True),)


def max_(a, axis: int, mask=None) -> Tensor:
    """Max over ``axis`` restricted to entries where ``mask`` holds.

    The gradient goes to the first maximal entry.  Every reduced slice must
    contain at least one valid entry.
    """
    a = as_tensor(a)
    x = a.data
    if mask is not None:
        mask = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
        if not np.all(mask.any(axis=axis)):
            raise ContractError("max: empty valid set along reduced axis")
        x = np.where(mask, x, -np.inf)
    idx = np.argmax(x, axis=axis)
    value = np.take_along_axis(x, np.expand_dims(idx, axis), axis=axis).squeeze(axis)
    return _make("max", value, (a,), idx=idx, axis=axis)


@_rule("max")
def _max_back(node, g):
    a = node.inputs[0]
    axis = node.ctx["axis"] % a.ndim
    out = np.zeros_like(a.data)
    np.put_along_axis(out, np.expand_dims(node.ctx["idx"], axis), np.expand_dims(g, axis), axis=axis)
    return (out,)


def argmax(a, axis: int = -1, mask=None) -> np.ndarray:
    """Non-differentiable argmax; ties resolve to the smallest index."""
    x = a.data if isinstance(a, Tensor) else np.asarray(a, dtype=np.float64)
    if mask is not None:
        x = np.where(np.broadcast_to(mask, x.shape), x, -np.inf)
    return np.argmax(x, axis=axis)


# ---------------------------------------------------------------------------
# Layers needing dedicated rules


def embedding(weight: Tensor, ids) -> Tensor:
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= weight.shape[0]):
        raise DimensionError(f"embedding: ids outside [0, {weight.shape[0]})")
    return _make("embedding", weight.data[ids], (weight,), ids=ids)


@_rule("embedding")
def _embedding_back(node, g):
    out = np.zeros_like(node.inputs[0].data)
    np.add.at(out, node.ctx["ids"], g)
    return (out,)


def conv1d(x, weight, bias=None) -> Tensor:
    """Valid 1-D convolution with stride 1.

    x: (B, L, C), weight: (k, C, S), bias: (S,)  ->  (B, L - k + 1, S)
    """
    x, weight = as_tensor(x), as_tensor(weight)
    if x.ndim != 3 or weight.ndim != 3 or x.shape[2] != weight.shape[1]:
        raise DimensionError(f"conv1d: input {x.shape} incompatible with kernel {weight.shape}")
    k = weight.shape[0]
    if x.shape[1] < k:
        raise DimensionError(f"conv1d: sequence length {x.shape[1]} shorter than kernel size {k}")
    windows = np.lib.stride_tricks.sliding_window_view(x.data, k, axis=1)  # B, T, C, k
    out = np.einsum("btck,kcs->bts", windows, weight.data, optimize=True)
    inputs = [x, weight]
    if bias is not None:
        bias = as_tensor(bias)
        out = out + bias.data
        inputs.append(bias)
    return _make("conv1d", out, inputs)


@_rule("conv1d")
def _conv1d_back(node, g):
    x, weight = node.inputs[0], node.inputs[1]
    k = weight.shape[0]
    steps = g.shape[1]
    gx = gw = None
    if x.requires_grad:
        gx = np.zeros_like(x.data)
        for offset in range(k):
            gx[:, offset:offset + steps] += g @ weight.data[offset].T
    if weight.requires_grad:
        windows = np.lib.stride_tricks.sliding_window_view(x.data, k, axis=1)
        gw = np.einsum("btck,bts->kcs", windows, g, optimize=True)
    grads = [gx, gw]
    if len(node.inputs) == 3:
        grads.append(g.sum(axis=(0, 1)))
    return tuple(grads)


def layer_norm(x, gamma, beta, eps: float = 1e-5) -> Tensor:
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    if gamma.shape != (x.shape[-1],) or beta.shape != (x.shape[-1],):
        raise DimensionError(f"layer_norm: gain/bias {gamma.shape}/{beta.shape} vs input {x.shape}")
    mu = x.data.mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(x.data.var(axis=-1, keepdims=True) + eps)
    xhat = (x.data - mu) * inv
    return _make("layer_norm", xhat * gamma.data + beta.data, (x, gamma, beta), xhat=xhat, inv=inv)


@_rule("layer_norm")
def _layer_norm_back(node, g):
    x, gamma, _ = node.inputs
    xhat, inv = node.ctx["xhat"], node.ctx["inv"]
    gxhat = g * gamma.data
    gx = inv * (gxhat - gxhat.mean(axis=-1, keepdims=True) - xhat * (gxhat * xhat).mean(axis=-1, keepdims=True))
    lead = tuple(range(g.ndim - 1))
    return gx, (g * xhat).sum(axis=lead), g.sum(axis=lead)


def dropout(x, keep: float, rng: np.random.Generator | None) -> Tensor:
    """Inverted dropout; identity when ``rng`` is None or ``keep`` is 1."""
    x = as_tensor(x)
    if rng is None or keep >= 1.0:
        return x
    if not 0.0 < keep <= 1.0:
        raise ContractError(f"dropout: keep probability {keep} outside (0, 1]")
    mask = (rng.random(x.shape) < keep) / keep
    return _make("dropout", x.data * mask, (x,), mask=mask)


@_rule("dropout")
def _dropout_back(node, g):
    return (g * node.ctx["mask"],)


def cross_entropy(logits, targets) -> Tensor:
    """Mean over rows of -sum(target * log_softmax(logits)).

    ``targets`` is a (B, C) array of probability distributions.
    """
    logits = as_tensor(logits)
    targets = np.asarray(targets, dtype=np.float64)
    if logits.ndim != 2 or targets.shape != logits.shape:
        raise DimensionError(f"cross_entropy: logits {logits.shape} vs targets {targets.shape}")
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    terms = np.where(targets > 0, targets * logp, 0.0)
    value = -terms.sum() / logits.shape[0]
    return _make("cross_entropy", np.asarray(value), (logits,), logp=logp, targets=targets)


@_rule("cross_entropy")
def _cross_entropy_back(node, g):
    logp, targets = node.ctx["logp"], node.ctx["targets"]
    rows = targets.shape[0]
    return (g * (np.exp(logp) * targets.sum(axis=1, keepdims=True) - targets) / rows,)


# ---------------------------------------------------------------------------
# Composites


def dot(a, b) -> Tensor:
    return sum_(mul(a, b))


def cosine(a, b) -> Tensor:
    """Cosine similarity along the last axis; 0 when either vector is zero."""
    a, b = as_tensor(a), as_tensor(b)
    num = sum_(a * b, axis=-1)
    norms = sqrt(sum_(a * a, axis=-1)) * sqrt(sum_(b * b, axis=-1))
    return safe_div(num, norms)


def parameters_of(tensors: Iterable[Tensor]) -> list[Tensor]:
    return [t for t in tensors if t.requires_grad]
