"""Gated multi-head self-attention over [h, m] rows of each argument.

No residual connection and no layer normalization: a per-row sigmoid gate
mixes the attention output with its input instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ConfigError, ContractError, DimensionError
from .nn import AttentionWeights, multi_head_attention, uniform_param, zero_rows
from .tensor import Tensor


@dataclass
class FusionWeights:
    attention: AttentionWeights
    gate: Tensor  # (2 * d_q, 1)

    @classmethod
    def init(cls, rng: np.random.Generator, dim: int) -> "FusionWeights":
        return cls(AttentionWeights.init(rng, dim), uniform_param(rng, (2 * dim, 1), 2 * dim))

    def named(self) -> dict[str, Tensor]:
        out = self.attention.named("fusion.attention")
        out["fusion.gate.weight"] = self.gate
        return out

    @classmethod
    def from_named(cls, params: dict[str, Tensor]) -> "FusionWeights":
        return cls(AttentionWeights.from_named(params, "fusion.attention"), params["fusion.gate.weight"])


@dataclass
class FusedSequence:
    """Fused rows of each argument, (B, L, d_q), with validity masks."""

    f1: Tensor
    mask1: np.ndarray
    f2: Tensor
    mask2: np.ndarray


def multi_head(x: Tensor, mask: np.ndarray, weights: AttentionWeights, heads: int, return_weights: bool = False):
    """Plain multi-head self-attention (Q = K = V = x), no residual, no normalization."""
    if x.shape[-1] % heads:
        raise ConfigError(f"multi_head: width {x.shape[-1]} not divisible by {heads} heads")
    return multi_head_attention(x, mask, weights, heads, return_weights=return_weights)


def gated_multi_head(x: Tensor, mask: np.ndarray, weights: FusionWeights, heads: int,
                     return_gate: bool = False):
    """a * Q' + (1 - a) * Q with a = sigmoid(W_a^T [Q, Q']) one scalar per row."""
    if weights.gate.shape != (2 * x.shape[-1], 1):
        raise DimensionError(f"gated_multi_head: gate {weights.gate.shape} for rows of width {x.shape[-1]}")
    attended = multi_head(x, mask, weights.attention, heads)
    gate = T.sigmoid(T.matmul(T.concat([x, attended], axis=-1), weights.gate))  # B, L, 1
    out = gate * attended + (1.0 - gate) * x
    if return_gate:
        return out, gate
    return out


def _fuse_one(h: Tensor, m: Tensor | None, mask: np.ndarray, weights: FusionWeights | None,
              heads: int, include_first_row: bool, keep: float, rng) -> tuple[Tensor, np.ndarray]:
    if m is not None and m.shape[:2] != h.shape[:2]:
        raise ContractError(f"fuse: row counts differ between h {h.shape} and m {m.shape}")
    x = T.concat([h, m], axis=-1) if m is not None else h
    if weights is not None:
        x = zero_rows(gated_multi_head(T.dropout(x, keep, rng), mask, weights, heads), mask)
    start = 0 if include_first_row else 1
    return x[:, start:], mask[:, start:]


def fuse(h1: Tensor, mask1: np.ndarray, h2: Tensor, mask2: np.ndarray,
         m1: Tensor | None, m2: Tensor | None, weights: FusionWeights | None, heads: int,
         include_first_row: bool = False, keep: float = 1.0,
         rng: np.random.Generator | None = None) -> FusedSequence:
    """Fuse each argument separately and emit rows 1.. (row 0 only as key/value).

    ``weights`` None is the ablation without gated fusion: the [h, m]
    concatenation passes through unchanged.  ``m1``/``m2`` None is the
    ablation without matching.
    """
    f1, k1 = _fuse_one(h1, m1, mask1, weights, heads, include_first_row, keep, rng)
    f2, k2 = _fuse_one(h2, m2, mask2, weights, heads, include_first_row, keep, rng)
    return FusedSequence(f1, k1, f2, k2)
