"""Conv-pool n-gram aggregation, highway layer and the softmax classifier."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import DataError, DimensionError
from .nn import linear, uniform_param
from .tensor import Tensor


@dataclass
class AggregationWeights:
    conv_weights: list[Tensor]  # kernel size c at index c-1: (c, d_q, s)
    conv_biases: list[Tensor]
    highway_transform: Tensor  # (zs, zs)
    highway_gate: Tensor  # (zs, 1)

    @classmethod
    def init(cls, rng: np.random.Generator, dim: int, conv_ops: int, filters: int) -> "AggregationWeights":
        ws, bs = [], []
        for c in range(1, conv_ops + 1):
            ws.append(uniform_param(rng, (c, dim, filters), c * dim))
            bs.append(uniform_param(rng, (filters,), c * dim))
        zs = conv_ops * filters
        return cls(ws, bs, uniform_param(rng, (zs, zs), zs), uniform_param(rng, (zs, 1), zs))

    def named(self) -> dict[str, Tensor]:
        out = {}
        for c, (w, b) in enumerate(zip(self.conv_weights, self.conv_biases), start=1):
            out[f"aggregation.conv{c}.weight"] = w
            out[f"aggregation.conv{c}.bias"] = b
        out["aggregation.highway.transform"] = self.highway_transform
        out["aggregation.highway.gate"] = self.highway_gate
        return out

    @classmethod
    def from_named(cls, params: dict[str, Tensor], conv_ops: int) -> "AggregationWeights":
        ws = [params[f"aggregation.conv{c}.weight"] for c in range(1, conv_ops + 1)]
        bs = [params[f"aggregation.conv{c}.bias"] for c in range(1, conv_ops + 1)]
        return cls(ws, bs, params["aggregation.highway.transform"], params["aggregation.highway.gate"])


@dataclass
class ClassifierWeights:
    hidden_weight: Tensor
    hidden_bias: Tensor
    output_weight: Tensor
    output_bias: Tensor

    @classmethod
    def init(cls, rng: np.random.Generator, in_dim: int, hidden: int, classes: int) -> "ClassifierWeights":
        return cls(uniform_param(rng, (in_dim, hidden), in_dim), uniform_param(rng, (hidden,), in_dim),
                   uniform_param(rng, (hidden, classes), hidden), uniform_param(rng, (classes,), hidden))

    def named(self) -> dict[str, Tensor]:
        return {
            "classifier.hidden.weight": self.hidden_weight, "classifier.hidden.bias": self.hidden_bias,
            "classifier.output.weight": self.output_weight, "classifier.output.bias": self.output_bias,
        }

    @classmethod
    def from_named(cls, params: dict[str, Tensor]) -> "ClassifierWeights":
        return cls(params["classifier.hidden.weight"], params["classifier.hidden.bias"],
                   params["classifier.output.weight"], params["classifier.output.bias"])


def conv_pool(f: Tensor, mask: np.ndarray, weights: AggregationWeights) -> Tensor:
    """(B, L, d_q) rows -> (B, z*s): per kernel size c, conv + ReLU + max over valid windows.

    A window is valid when all c of its rows are real (masks are prefixes).
    """
    pooled = []
    for w, b in zip(weights.conv_weights, weights.conv_biases):
        c = w.shape[0]
        if f.shape[1] < c:
            raise DimensionError(f"conv_pool: {f.shape[1]} rows shorter than kernel size {c}")
        response = T.relu(T.conv1d(f, w, b))  # B, L-c+1, s
        windows = mask[:, c - 1:]
        pooled.append(T.max_(response, axis=1, mask=windows[:, :, None]))
    return T.concat(pooled, axis=-1)


def highway(u: Tensor, transform: Tensor, gate_weight: Tensor, return_gate: bool = False):
    """o = g * ReLU(W_h^T u) + (1 - g) * u with a scalar gate g = sigmoid(W_g^T u)."""
    transformed = T.relu(T.matmul(u, transform))
    gate = T.sigmoid(T.matmul(u, gate_weight))
    out = gate * transformed + (1.0 - gate) * u
    if return_gate:
        return out, gate
    return out


def summarize(f: Tensor, mask: np.ndarray, weights: AggregationWeights, keep: float = 1.0,
              rng: np.random.Generator | None = None) -> Tensor:
    u = conv_pool(T.dropout(f, keep, rng), mask, weights)
    return highway(T.dropout(u, keep, rng), weights.highway_transform, weights.highway_gate)


def logits(o1: Tensor, o2: Tensor, head: ClassifierWeights, keep: float = 1.0,
           rng: np.random.Generator | None = None) -> Tensor:
    x = T.dropout(T.concat([o1, o2], axis=-1), keep, rng)
    hidden = T.dropout(T.relu(linear(x, head.hidden_weight, head.hidden_bias)), keep, rng)
    return linear(hidden, head.output_weight, head.output_bias)


def predict(o1: Tensor, o2: Tensor, head: ClassifierWeights) -> Tensor:
    """Class probabilities softmax(affine2(ReLU(affine1([o1, o2]))))."""
    return T.softmax(logits(o1, o2, head), axis=-1)


def target_distribution(gold: list[list[int]], classes: int, mode: str = "uniform") -> np.ndarray:
    """Training targets: uniform mixture over gold labels, or the first gold label only."""
    out = np.zeros((len(gold), classes))
    for row, labels in enumerate(gold):
        if not labels:
            raise DataError(f"instance {row} has an empty gold label set")
        chosen = labels if mode == "uniform" else labels[:1]
        for label in dict.fromkeys(chosen):
            out[row, label] += 1.0 / len(set(chosen))
    return out


def loss(probs, gold: list[list[int]], mode: str = "uniform") -> Tensor:
    """Mean cross-entropy of probability rows against the gold target mixture."""
    probs = T.as_tensor(probs)
    if probs.ndim == 1:
        probs = probs.reshape(1, probs.shape[0])
    targets = target_distribution(gold, probs.shape[1], mode)
    support = targets > 0
    picked = probs[support]
    return -(T.log(picked) * targets[support]).sum() * (1.0 / probs.shape[0])
