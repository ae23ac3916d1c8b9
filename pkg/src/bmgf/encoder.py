"""Tokenization into the CLS/SEP/SEP/EOS pair layout and the micro-encoder.

The joint layout of an argument pair with M and N tokens is::

    [CLS, a_1 .. a_M, SEP, SEP, b_1 .. b_N, EOS]      (length M + N + 4)

Segment 0 covers CLS through the first SEP, segment 1 the second SEP
through EOS.  After encoding, rows 0..M+1 belong to arg1 and rows
M+2..M+N+3 to arg2.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from . import tensor as T
from .config import ModelConfig
from .errors import ContractError, DataError, InputError
from .nn import AttentionWeights, linear, multi_head_attention, normal_param, ones_param, uniform_param, zero_rows, zeros_param
from .tensor import Tensor

PAD, UNK, CLS, SEP, EOS = "<pad>", "<unk>", "<cls>", "<sep>", "<eos>"
RESERVED = (PAD, UNK, CLS, SEP, EOS)

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def tokenize(text: str) -> list[str]:
    """Lowercased word / punctuation split."""
    return _TOKEN_RE.findall(text.lower())


class Vocabulary:
    """Token <-> id map whose first entries are the reserved tokens."""

    def __init__(self, tokens: Iterable[str]):
        self.tokens: list[str] = list(tokens)
        if tuple(self.tokens[: len(RESERVED)]) != RESERVED:
            raise DataError(f"vocabulary must start with reserved tokens {RESERVED}")
        self.index = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise DataError("vocabulary contains duplicate tokens")

    pad_id = RESERVED.index(PAD)
    unk_id = RESERVED.index(UNK)
    cls_id = RESERVED.index(CLS)
    sep_id = RESERVED.index(SEP)
    eos_id = RESERVED.index(EOS)

    def __len__(self) -> int:
        return len(self.tokens)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def ids(self, words: Iterable[str]) -> list[int]:
        return [self.index.get(w, self.unk_id) for w in words]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.tokens[i] for i in ids]

    @classmethod
    def build(cls, texts: Iterable[str], min_count: int = 1) -> "Vocabulary":
        counts = Counter(tok for text in texts for tok in tokenize(text))
        words = sorted((w for w, c in counts.items() if c >= min_count and w not in RESERVED),
                       key=lambda w: (-counts[w], w))
        return cls(list(RESERVED) + words)

    def save(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.tokens) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        lines = Path(path).read_text(encoding="utf-8").split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        return cls(lines)


@dataclass
class TokenizedPair:
    token_ids: np.ndarray
    segment_ids: np.ndarray
    m: int
    n: int

    @property
    def arg1_span(self) -> tuple[int, int]:
        return 0, self.m + 1

    @property
    def arg2_span(self) -> tuple[int, int]:
        return self.m + 2, self.m + self.n + 3

    def __len__(self) -> int:
        return len(self.token_ids)


@dataclass
class SiamesePair:
    """Two independently laid out sequences [CLS, tokens, EOS]."""

    arg1_ids: np.ndarray
    arg2_ids: np.ndarray

    @property
    def m(self) -> int:
        return len(self.arg1_ids) - 2

    @property
    def n(self) -> int:
        return len(self.arg2_ids) - 2


def truncated_lengths(m: int, n: int, budget: int) -> tuple[int, int]:
    """Token counts kept for each argument so that m + n <= budget.

    Both arguments shrink in proportion to their length; each keeps at least
    one token.
    """
    if m + n <= budget:
        return m, n
    if budget < 2:
        raise InputError(f"cannot fit two non-empty arguments into {budget} token slots")
    keep_m = min(m, max(1, (budget * m) // (m + n)))
    keep_n = min(n, budget - keep_m)
    keep_m = min(m, budget - keep_n)
    return keep_m, keep_n


def _words(text: str, which: str) -> list[str]:
    words = tokenize(text)
    if not words:
        raise InputError(f"{which} is empty after normalization")
    return words


def tokenize_pair(arg1: str, arg2: str, vocab: Vocabulary, max_len: int) -> TokenizedPair:
    w1, w2 = _words(arg1, "arg1"), _words(arg2, "arg2")
    m, n = truncated_lengths(len(w1), len(w2), max_len - 4)
    ids = ([vocab.cls_id] + vocab.ids(w1[:m]) + [vocab.sep_id, vocab.sep_id]
           + vocab.ids(w2[:n]) + [vocab.eos_id])
    segments = [0] * (m + 2) + [1] * (n + 2)
    return TokenizedPair(np.array(ids, dtype=np.int64), np.array(segments, dtype=np.int64), m, n)


def tokenize_single(text: str, vocab: Vocabulary, max_len: int, which: str = "argument") -> np.ndarray:
    words = _words(text, which)[: max_len - 2]
    return np.array([vocab.cls_id] + vocab.ids(words) + [vocab.eos_id], dtype=np.int64)


def tokenize_instance(arg1: str, arg2: str, vocab: Vocabulary, config: ModelConfig):
    if config.mode == "siamese":
        return SiamesePair(tokenize_single(arg1, vocab, config.max_len, "arg1"),
                           tokenize_single(arg2, vocab, config.max_len, "arg2"))
    return tokenize_pair(arg1, arg2, vocab, config.max_len)


# ---------------------------------------------------------------------------
# Batching


@dataclass
class EncoderBatch:
    """Padded token ids for a batch, in joint or siamese layout."""

    mode: str
    m: np.ndarray
    n: np.ndarray
    token_ids: np.ndarray | None = None
    segment_ids: np.ndarray | None = None
    valid: np.ndarray | None = None
    arg1_ids: np.ndarray | None = None
    arg1_valid: np.ndarray | None = None
    arg2_ids: np.ndarray | None = None
    arg2_valid: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.m)


def _pad(rows: list[np.ndarray], pad_id: int) -> tuple[np.ndarray, np.ndarray]:
    width = max(len(r) for r in rows)
    ids = np.full((len(rows), width), pad_id, dtype=np.int64)
    valid = np.zeros((len(rows), width), dtype=bool)
    for i, r in enumerate(rows):
        ids[i, : len(r)] = r
        valid[i, : len(r)] = True
    return ids, valid


def make_batch(pairs: list, pad_id: int = 0) -> EncoderBatch:
    if not pairs:
        raise ContractError("make_batch: empty batch")
    m = np.array([p.m for p in pairs], dtype=np.int64)
    n = np.array([p.n for p in pairs], dtype=np.int64)
    if isinstance(pairs[0], SiamesePair):
        a1, v1 = _pad([p.arg1_ids for p in pairs], pad_id)
        a2, v2 = _pad([p.arg2_ids for p in pairs], pad_id)
        return EncoderBatch("siamese", m, n, arg1_ids=a1, arg1_valid=v1, arg2_ids=a2, arg2_valid=v2)
    ids, valid = _pad([p.token_ids for p in pairs], pad_id)
    segs, _ = _pad([p.segment_ids for p in pairs], 0)
    return EncoderBatch("joint", m, n, token_ids=ids, segment_ids=segs, valid=valid)


# ---------------------------------------------------------------------------
# Weights


@dataclass
class EncoderLayerWeights:
    ln1_gamma: Tensor
    ln1_beta: Tensor
    attention: AttentionWeights
    ln2_gamma: Tensor
    ln2_beta: Tensor
    ff_w1: Tensor
    ff_b1: Tensor
    ff_w2: Tensor
    ff_b2: Tensor


@dataclass
class EncoderWeights:
    token: Tensor
    position: Tensor | None
    segment: Tensor | None
    layers: list[EncoderLayerWeights]
    final_gamma: Tensor
    final_beta: Tensor

    @classmethod
    def init(cls, rng: np.random.Generator, config: ModelConfig, vocab_size: int) -> "EncoderWeights":
        d, ff = config.hidden_dim, config.ff_dim
        token = normal_param(rng, (vocab_size, d))
        position = normal_param(rng, (config.max_len, d)) if config.use_position_embeddings else None
        segment = normal_param(rng, (2, d)) if config.use_segment_embeddings else None
        layers = []
        for _ in range(config.encoder_layers):
            layers.append(EncoderLayerWeights(
                ones_param(d), zeros_param(d), AttentionWeights.init(rng, d),
                ones_param(d), zeros_param(d),
                uniform_param(rng, (d, ff), d), uniform_param(rng, (ff,), d),
                uniform_param(rng, (ff, d), ff), uniform_param(rng, (d,), ff),
            ))
        return cls(token, position, segment, layers, ones_param(d), zeros_param(d))

    def named(self) -> dict[str, Tensor]:
        out = {"encoder.token_embedding": self.token}
        if self.position is not None:
            out["encoder.position_embedding"] = self.position
        if self.segment is not None:
            out["encoder.segment_embedding"] = self.segment
        for i, layer in enumerate(self.layers):
            p = f"encoder.layers.{i}"
            out[f"{p}.ln1.gamma"] = layer.ln1_gamma
            out[f"{p}.ln1.bias"] = layer.ln1_beta
            out.update(layer.attention.named(f"{p}.attention"))
            out[f"{p}.ln2.gamma"] = layer.ln2_gamma
            out[f"{p}.ln2.bias"] = layer.ln2_beta
            out[f"{p}.ff1.weight"] = layer.ff_w1
            out[f"{p}.ff1.bias"] = layer.ff_b1
            out[f"{p}.ff2.weight"] = layer.ff_w2
            out[f"{p}.ff2.bias"] = layer.ff_b2
        out["encoder.final_ln.gamma"] = self.final_gamma
        out["encoder.final_ln.bias"] = self.final_beta
        return out

    @classmethod
    def from_named(cls, params: dict[str, Tensor], config: ModelConfig) -> "EncoderWeights":
        layers = []
        for i in range(config.encoder_layers):
            p = f"encoder.layers.{i}"
            layers.append(EncoderLayerWeights(
                params[f"{p}.ln1.gamma"], params[f"{p}.ln1.bias"],
                AttentionWeights.from_named(params, f"{p}.attention"),
                params[f"{p}.ln2.gamma"], params[f"{p}.ln2.bias"],
                params[f"{p}.ff1.weight"], params[f"{p}.ff1.bias"],
                params[f"{p}.ff2.weight"], params[f"{p}.ff2.bias"],
            ))
        return cls(params["encoder.token_embedding"], params.get("encoder.position_embedding"),
                   params.get("encoder.segment_embedding"), layers,
                   params["encoder.final_ln.gamma"], params["encoder.final_ln.bias"])


# ---------------------------------------------------------------------------
# Forward


@dataclass
class ContextualizedPair:
    """Per-argument encoder rows, padded over the batch.

    h1 is (B, L1, d) holding rows 0..M+1 of each instance, h2 is (B, L2, d)
    holding rows 0..N+1; the masks mark real rows.
    """

    h1: Tensor
    mask1: np.ndarray
    h2: Tensor
    mask2: np.ndarray

    @classmethod
    def from_rows(cls, h1, h2) -> "ContextualizedPair":
        """Wrap a single unpadded instance, (M+2, d) and (N+2, d), as a batch of one."""
        h1, h2 = T.as_tensor(h1), T.as_tensor(h2)
        if h1.ndim == 2:
            h1 = h1.reshape(1, *h1.shape)
        if h2.ndim == 2:
            h2 = h2.reshape(1, *h2.shape)
        return cls(h1, np.ones(h1.shape[:2], dtype=bool), h2, np.ones(h2.shape[:2], dtype=bool))

    @property
    def lengths1(self) -> np.ndarray:
        return self.mask1.sum(axis=1)

    @property
    def lengths2(self) -> np.ndarray:
        return self.mask2.sum(axis=1)

    def swapped(self) -> "ContextualizedPair":
        return ContextualizedPair(self.h2, self.mask2, self.h1, self.mask1)


def embed(weights: EncoderWeights, token_ids: np.ndarray, segment_ids: np.ndarray | None,
          config: ModelConfig) -> Tensor:
    """token_emb[id] + pos_emb[t] + segment_emb[seg] (segment term only when enabled)."""
    token_ids = np.asarray(token_ids, dtype=np.int64)
    length = token_ids.shape[-1]
    if length > config.max_len:
        raise InputError(f"sequence length {length} exceeds max_len {config.max_len}")
    if token_ids.size and (token_ids.min() < 0 or token_ids.max() >= weights.token.shape[0]):
        raise InputError(f"token id outside vocabulary of size {weights.token.shape[0]}")
    out = T.embedding(weights.token, token_ids)
    if weights.position is not None:
        out = out + weights.position[:length]
    if weights.segment is not None:
        if segment_ids is None:
            segment_ids = np.zeros_like(token_ids)
        out = out + T.embedding(weights.segment, segment_ids)
    return out


def encode(weights: EncoderWeights, embedded: Tensor, valid: np.ndarray, config: ModelConfig,
           rng: np.random.Generator | None = None, return_attention: bool = False):
    """Pre-norm transformer stack over (B, L, d); rows where ``valid`` is False are zeroed."""
    keep = 1.0 - config.dropout
    x = T.dropout(embedded, keep, rng)
    attentions = []
    for layer in weights.layers:
        normed = T.layer_norm(x, layer.ln1_gamma, layer.ln1_beta)
        attended, attn = multi_head_attention(normed, valid, layer.attention, config.encoder_heads,
                                              return_weights=True)
        attentions.append(attn)
        x = x + T.dropout(attended, keep, rng)
        normed = T.layer_norm(x, layer.ln2_gamma, layer.ln2_beta)
        hidden = T.relu(linear(normed, layer.ff_w1, layer.ff_b1))
        x = x + T.dropout(linear(hidden, layer.ff_w2, layer.ff_b2), keep, rng)
    out = zero_rows(T.layer_norm(x, weights.final_gamma, weights.final_beta), valid)
    if return_attention:
        return out, attentions
    return out


def split_args(encoded: Tensor, m: np.ndarray, n: np.ndarray) -> ContextualizedPair:
    """Rows 0..M+1 become h1 and rows M+2..M+N+3 become h2, per instance."""
    m, n = np.asarray(m), np.asarray(n)
    batch, length = encoded.shape[:2]
    if np.any(m + n + 4 > length) or np.any(m < 0) or np.any(n < 0):
        raise ContractError("split_args: argument spans exceed the encoded sequence")
    len1, len2 = m + 2, n + 2
    w1, w2 = int(len1.max()), int(len2.max())
    cols1 = np.arange(w1)[None, :]
    cols2 = np.arange(w2)[None, :]
    mask1 = cols1 < len1[:, None]
    mask2 = cols2 < len2[:, None]
    idx1 = np.where(mask1, cols1, 0)
    idx2 = np.where(mask2, len1[:, None] + cols2, 0)
    rows = np.arange(batch)[:, None]
    h1 = zero_rows(encoded[rows, idx1], mask1)
    h2 = zero_rows(encoded[rows, idx2], mask2)
    return ContextualizedPair(h1, mask1, h2, mask2)


def encode_joint(weights: EncoderWeights, batch: EncoderBatch, config: ModelConfig,
                 rng: np.random.Generator | None = None) -> ContextualizedPair:
    embedded = embed(weights, batch.token_ids, batch.segment_ids, config)
    return split_args(encode(weights, embedded, batch.valid, config, rng), batch.m, batch.n)


def encode_siamese(weights: EncoderWeights, batch: EncoderBatch, config: ModelConfig,
                   rng: np.random.Generator | None = None) -> ContextualizedPair:
    """Encode each argument as its own [CLS, tokens, EOS] sequence with segment 0."""
    if batch.mode != "siamese":
        raise ContractError("encode_siamese: batch is not in siamese layout")
    h1 = encode(weights, embed(weights, batch.arg1_ids, None, config), batch.arg1_valid, config, rng)
    h2 = encode(weights, embed(weights, batch.arg2_ids, None, config), batch.arg2_valid, config, rng)
    return ContextualizedPair(h1, batch.arg1_valid, h2, batch.arg2_valid)


def contextualize(weights: EncoderWeights, batch: EncoderBatch, config: ModelConfig,
                  rng: np.random.Generator | None = None) -> ContextualizedPair:
    if batch.mode == "siamese":
        return encode_siamese(weights, batch, config, rng)
    return encode_joint(weights, batch, config, rng)
