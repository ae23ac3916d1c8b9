"""Parameter creation and the small layer helpers shared by several modules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .tensor import Tensor


def uniform_param(rng: np.random.Generator, shape, fan_in: int) -> Tensor:
    bound = 1.0 / np.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


def normal_param(rng: np.random.Generator, shape, std: float = 0.02) -> Tensor:
    return Tensor(rng.normal(0.0, std, size=shape), requires_grad=True)


def zeros_param(shape) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True)


def ones_param(shape) -> Tensor:
    return Tensor(np.ones(shape), requires_grad=True)


def linear(x, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    y = T.matmul(x, weight)
    return y + bias if bias is not None else y


@dataclass
class AttentionWeights:
    """Projections of one multi-head attention block; weights are (in, out)."""

    wq: Tensor
    bq: Tensor
    wk: Tensor
    bk: Tensor
    wv: Tensor
    bv: Tensor
    wo: Tensor
    bo: Tensor

    @classmethod
    def init(cls, rng: np.random.Generator, dim: int) -> "AttentionWeights":
        def w():
            return uniform_param(rng, (dim, dim), dim)

        def b():
            return uniform_param(rng, (dim,), dim)

        return cls(w(), b(), w(), b(), w(), b(), w(), b())

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {
            f"{prefix}.query.weight": self.wq, f"{prefix}.query.bias": self.bq,
            f"{prefix}.key.weight": self.wk, f"{prefix}.key.bias": self.bk,
            f"{prefix}.value.weight": self.wv, f"{prefix}.value.bias": self.bv,
            f"{prefix}.output.weight": self.wo, f"{prefix}.output.bias": self.bo,
        }

    @classmethod
    def from_named(cls, params: dict[str, Tensor], prefix: str) -> "AttentionWeights":
        get = lambda part: params[f"{prefix}.{part}"]  # noqa: E731
        return cls(get("query.weight"), get("query.bias"), get("key.weight"), get("key.bias"),
                   get("value.weight"), get("value.bias"), get("output.weight"), get("output.bias"))


def multi_head_attention(x: Tensor, mask: np.ndarray, weights: AttentionWeights, heads: int,
                         return_weights: bool = False):
    """Scaled dot-product self-attention over (B, L, D) rows.

    ``mask`` is a (B, L) boolean array; False keys receive zero weight.
    """
    batch, length, dim = x.shape
    head_dim = dim // heads

    def split_heads(t: Tensor) -> Tensor:
        return t.reshape(batch, length, heads, head_dim).transpose(0, 2, 1, 3)

    q = split_heads(linear(x, weights.wq, weights.bq))
    k = split_heads(linear(x, weights.wk, weights.bk))
    v = split_heads(linear(x, weights.wv, weights.bv))
    scores = T.matmul(q, k.transpose(0, 1, 3, 2)) * (1.0 / np.sqrt(head_dim))
    attn = T.softmax(scores, axis=-1, mask=mask[:, None, None, :])
    context = T.matmul(attn, v).transpose(0, 2, 1, 3).reshape(batch, length, dim)
    out = linear(context, weights.wo, weights.bo)
    if return_weights:
        return out, attn
    return out


def zero_rows(x: Tensor, mask: np.ndarray) -> Tensor:
    """Multiply (B, L, D) rows by the (B, L) validity mask."""
    return x * mask[..., None].astype(np.float64)
