"""The full pipeline: encoder -> matching -> fusion -> aggregation -> classifier."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .aggregation import AggregationWeights, ClassifierWeights, logits as classifier_logits, summarize
from .config import ModelConfig
from .encoder import ContextualizedPair, EncoderBatch, EncoderWeights, Vocabulary, contextualize, make_batch, tokenize_instance
from .fusion import FusedSequence, FusionWeights, fuse
from .matching import MatchVector, MatchWeights, bilateral_match
from .tensor import Tensor


@dataclass
class ForwardTrace:
    pair: ContextualizedPair
    match: MatchVector | None
    fused: FusedSequence
    o1: Tensor
    o2: Tensor
    logits: Tensor


class BMGFModel:
    """Parameters plus the forward computation for one configuration."""

    def __init__(self, config: ModelConfig, vocab: Vocabulary, labels: list[str],
                 params: dict[str, Tensor] | None = None):
        self.config = config
        self.vocab = vocab
        self.labels = list(labels)
        if params is None:
            params = self._init_params(np.random.default_rng(np.random.SeedSequence([config.seed, 1])))
        self.params = params
        self._bind()
        if config.freeze_encoder:
            for name, p in self.params.items():
                if name.startswith("encoder.") and name != "encoder.segment_embedding":
                    p.requires_grad = False
                    p.grad = None

    def _init_params(self, rng: np.random.Generator) -> dict[str, Tensor]:
        c = self.config
        params = EncoderWeights.init(rng, c, len(self.vocab)).named()
        if c.enable_matching:
            params.update(MatchWeights.init(rng, c.perspectives, c.hidden_dim).named())
        if c.enable_fusion:
            params.update(FusionWeights.init(rng, c.fusion_dim).named())
        params.update(AggregationWeights.init(rng, c.fusion_dim, c.conv_ops, c.conv_filters).named())
        params.update(ClassifierWeights.init(rng, 2 * c.summary_dim, c.classifier_hidden, len(self.labels)).named())
        for name, p in params.items():
            p.name = name
        return params

    def _bind(self) -> None:
        c, p = self.config, self.params
        self.encoder = EncoderWeights.from_named(p, c)
        self.matching = MatchWeights.from_named(p) if c.enable_matching else None
        self.fusion = FusionWeights.from_named(p) if c.enable_fusion else None
        self.aggregation = AggregationWeights.from_named(p, c.conv_ops)
        self.classifier = ClassifierWeights.from_named(p)

    def trainable(self) -> dict[str, Tensor]:
        return {name: p for name, p in self.params.items() if p.requires_grad}

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def batch(self, pairs: list[tuple[str, str]]) -> EncoderBatch:
        return make_batch([tokenize_instance(a1, a2, self.vocab, self.config) for a1, a2 in pairs],
                          self.vocab.pad_id)

    def forward(self, batch: EncoderBatch, rng: np.random.Generator | None = None) -> ForwardTrace:
        """Logits for a batch; dropout is active exactly when ``rng`` is given."""
        c = self.config
        keep = 1.0 - c.dropout
        pair = contextualize(self.encoder, batch, c, rng)
        match = bilateral_match(pair, self.matching) if self.matching is not None else None
        fused = fuse(pair.h1, pair.mask1, pair.h2, pair.mask2,
                     match.m1 if match else None, match.m2 if match else None,
                     self.fusion, c.fusion_heads, c.fusion_include_first_row, keep, rng)
        o1 = summarize(fused.f1, fused.mask1, self.aggregation, keep, rng)
        o2 = summarize(fused.f2, fused.mask2, self.aggregation, keep, rng)
        out = classifier_logits(o1, o2, self.classifier, keep, rng)
        return ForwardTrace(pair, match, fused, o1, o2, out)

    def logits(self, batch: EncoderBatch, rng: np.random.Generator | None = None) -> Tensor:
        return self.forward(batch, rng).logits

    def loss(self, batch: EncoderBatch, targets: np.ndarray, rng: np.random.Generator | None = None) -> Tensor:
        return T.cross_entropy(self.logits(batch, rng), targets)

    def predict_proba(self, batch: EncoderBatch) -> np.ndarray:
        return T.softmax(self.logits(batch), axis=-1).data
