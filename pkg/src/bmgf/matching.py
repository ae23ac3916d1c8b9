"""Bilateral multi-perspective matching between the two argument sequences.

Each token of one argument is compared with the other argument four ways
(full, maxpooling, attentive, max-attentive).  Every comparison is a
multi-perspective cosine: perspective k rescales both vectors elementwise by
row k of a weight matrix before taking their cosine.  The five weight
matrices are shared by the arg1->arg2 and arg2->arg1 directions.

All functions work on padded batches: h (B, L, d) plus a (B, L) mask.  PAD
positions are excluded from every max / argmax / sum and emit zero rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .encoder import ContextualizedPair
from .errors import ContractError, DimensionError
from .nn import uniform_param, zero_rows
from .tensor import Tensor

# |sum of cosine weights| below this falls back to the unweighted mean
ATTENTIVE_EPS = 1e-8


@dataclass
class MatchWeights:
    full_first: Tensor
    full_last: Tensor
    maxpool: Tensor
    attentive: Tensor
    max_attentive: Tensor

    NAMES = ("full_first", "full_last", "maxpool", "attentive", "max_attentive")

    @classmethod
    def init(cls, rng: np.random.Generator, perspectives: int, dim: int) -> "MatchWeights":
        return cls(*(uniform_param(rng, (perspectives, dim), dim) for _ in cls.NAMES))

    def named(self) -> dict[str, Tensor]:
        return {f"matching.{name}": getattr(self, name) for name in self.NAMES}

    @classmethod
    def from_named(cls, params: dict[str, Tensor]) -> "MatchWeights":
        return cls(*(params[f"matching.{name}"] for name in cls.NAMES))

    @property
    def perspectives(self) -> int:
        return self.full_first.shape[0]


@dataclass
class MatchVector:
    """m1 (B, L1, 5l) and m2 (B, L2, 5l), columns [full(2l), maxpool, attentive, max-attentive]."""

    m1: Tensor
    m2: Tensor


def _expand_front(x: Tensor) -> tuple[Tensor, bool]:
    if x.ndim == 1:
        return x.reshape(1, x.shape[0]), True
    return x, False


def multi_cos(v1, v2, weight) -> Tensor:
    """Cosines of (W_k * v1, W_k * v2) for every perspective k.

    v1 and v2 broadcast against each other over leading axes and end in d;
    weight is (l, d).  Returns (..., l).  A perspective where either scaled
    vector is zero yields 0.
    """
    v1, v2, weight = T.as_tensor(v1), T.as_tensor(v2), T.as_tensor(weight)
    if weight.ndim != 2 or v1.shape[-1] != weight.shape[1] or v2.shape[-1] != weight.shape[1]:
        raise DimensionError(f"multi_cos: vectors {v1.shape}, {v2.shape} incompatible with weight {weight.shape}")
    sq = (weight * weight).transpose()
    prod, squeeze = _expand_front(v1 * v2)
    num = T.matmul(prod, sq)
    a2, _ = _expand_front(v1 * v1)
    b2, _ = _expand_front(v2 * v2)
    norms = T.sqrt(T.matmul(a2, sq)) * T.sqrt(T.matmul(b2, sq))
    out = T.safe_div(num, norms)
    return out.reshape(out.shape[-1]) if squeeze else out


def pairwise_multi_cos(a: Tensor, b: Tensor, weight) -> Tensor:
    """All-pairs multi-perspective cosine: (B, L1, d) x (B, L2, d) -> (B, l, L1, L2)."""
    weight = T.as_tensor(weight)
    batch, len1, dim = a.shape
    len2 = b.shape[1]
    persp = weight.shape[0]
    if b.shape[0] != batch or b.shape[2] != dim or weight.shape[1] != dim:
        raise DimensionError(f"pairwise_multi_cos: {a.shape}, {b.shape}, weight {weight.shape}")
    sq = weight * weight
    scaled = a.reshape(batch, 1, len1, dim) * sq.reshape(1, persp, 1, dim)
    num = T.matmul(scaled, b.transpose(0, 2, 1).reshape(batch, 1, dim, len2))
    norm_a = T.sqrt(T.matmul(a * a, sq.transpose())).transpose(0, 2, 1)  # B, l, L1
    norm_b = T.sqrt(T.matmul(b * b, sq.transpose())).transpose(0, 2, 1)  # B, l, L2
    denom = norm_a.reshape(batch, persp, len1, 1) * norm_b.reshape(batch, persp, 1, len2)
    return T.safe_div(num, denom)


def _check(pair: ContextualizedPair) -> None:
    if np.any(pair.lengths1 < 2) or np.any(pair.lengths2 < 2):
        raise ContractError("matching: each argument needs at least its two special rows")


def _rows(h: Tensor, index: np.ndarray) -> Tensor:
    """h[b, index[b]] for every batch entry, keeping a length-1 row axis."""
    batch = h.shape[0]
    return h[np.arange(batch), index].reshape(batch, 1, h.shape[2])


def full_matching(pair: ContextualizedPair, weights: MatchWeights) -> tuple[Tensor, Tensor]:
    """Each token against the other argument's first and last special rows -> 2l columns."""
    _check(pair)
    first1, last1 = pair.h1[:, 0:1], _rows(pair.h1, pair.lengths1 - 1)
    first2, last2 = pair.h2[:, 0:1], _rows(pair.h2, pair.lengths2 - 1)
    m1 = T.concat([multi_cos(pair.h1, first2, weights.full_first),
                   multi_cos(pair.h1, last2, weights.full_last)], axis=-1)
    m2 = T.concat([multi_cos(pair.h2, first1, weights.full_first),
                   multi_cos(pair.h2, last1, weights.full_last)], axis=-1)
    return zero_rows(m1, pair.mask1), zero_rows(m2, pair.mask2)


def maxpooling_matching(pair: ContextualizedPair, weights: MatchWeights) -> tuple[Tensor, Tensor]:
    """Elementwise max over the other argument's valid rows of the multi-cosine."""
    _check(pair)
    sims = pairwise_multi_cos(pair.h1, pair.h2, weights.maxpool)  # B, l, L1, L2
    m1 = T.max_(sims, axis=3, mask=pair.mask2[:, None, None, :]).transpose(0, 2, 1)
    m2 = T.max_(sims, axis=2, mask=pair.mask1[:, None, :, None]).transpose(0, 2, 1)
    return zero_rows(m1, pair.mask1), zero_rows(m2, pair.mask2)


def cosine_matrix(pair: ContextualizedPair) -> Tensor:
    """Plain cosines c[b, i, j] = cos(h1_i, h2_j); zero wherever either row is PAD."""
    ones = np.ones((1, pair.h1.shape[2]))
    c = pairwise_multi_cos(pair.h1, pair.h2, ones)
    batch, _, len1, len2 = c.shape
    valid = pair.mask1[:, :, None] & pair.mask2[:, None, :]
    return c.reshape(batch, len1, len2) * valid.astype(np.float64)


def _weighted_mean(weights_: Tensor, rows: Tensor, lengths: np.ndarray) -> Tensor:
    """Per-query weighted average of ``rows``; (B, Q, K) x (B, K, d) -> (B, Q, d)."""
    weighted = T.matmul(weights_, rows)
    total = weights_.sum(axis=2)
    small = np.abs(total.data) < ATTENTIVE_EPS
    safe_total = T.where(small, 1.0, total)
    mean = rows.sum(axis=1, keepdims=True) * (1.0 / lengths.astype(np.float64))[:, None, None]
    return T.where(small[..., None], mean, weighted / safe_total.reshape(*safe_total.shape, 1))


def attentive_matching(pair: ContextualizedPair, weights: MatchWeights, cos: Tensor | None = None) -> tuple[Tensor, Tensor]:
    """Each token against the cosine-weighted mean of the other argument."""
    _check(pair)
    c = cosine_matrix(pair) if cos is None else cos
    mean2 = _weighted_mean(c, pair.h2, pair.lengths2)
    mean1 = _weighted_mean(c.transpose(0, 2, 1), pair.h1, pair.lengths1)
    m1 = multi_cos(pair.h1, mean2, weights.attentive)
    m2 = multi_cos(pair.h2, mean1, weights.attentive)
    return zero_rows(m1, pair.mask1), zero_rows(m2, pair.mask2)


def max_attentive_matching(pair: ContextualizedPair, weights: MatchWeights, cos: Tensor | None = None) -> tuple[Tensor, Tensor]:
    """Each token against the other argument's row of highest plain cosine (ties -> first)."""
    _check(pair)
    c = cosine_matrix(pair) if cos is None else cos
    rows = np.arange(pair.h1.shape[0])[:, None]
    best2 = T.argmax(c, axis=2, mask=pair.mask2[:, None, :])  # B, L1
    best1 = T.argmax(c, axis=1, mask=pair.mask1[:, :, None])  # B, L2
    m1 = multi_cos(pair.h1, pair.h2[rows, best2], weights.max_attentive)
    m2 = multi_cos(pair.h2, pair.h1[rows, best1], weights.max_attentive)
    return zero_rows(m1, pair.mask1), zero_rows(m2, pair.mask2)


def bilateral_match(pair: ContextualizedPair, weights: MatchWeights) -> MatchVector:
    c = cosine_matrix(pair)
    parts = [
        full_matching(pair, weights),
        maxpooling_matching(pair, weights),
        attentive_matching(pair, weights, cos=c),
        max_attentive_matching(pair, weights, cos=c),
    ]
    m1 = T.concat([p[0] for p in parts], axis=-1)
    m2 = T.concat([p[1] for p in parts], axis=-1)
    return MatchVector(m1, m2)
