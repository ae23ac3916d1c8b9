"""Training loop, checkpoints, evaluation and prediction."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .aggregation import target_distribution
from .config import ModelConfig
from .data import DiscourseInstance, LabelSchema, get_schema, select
from .encoder import Vocabulary, make_batch, tokenize_instance
from .errors import ConfigError, DataError
from .metrics import EvalReport, evaluate
from .model import BMGFModel
from .optim import OptimizerState, adam_step, clip_grad_l2
from .tensor import Tensor

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "bmgf-checkpoint"
CHECKPOINT_VERSION = 1


# ---------------------------------------------------------------------------
# Checkpoints


@dataclass
class Checkpoint:
    config: ModelConfig
    vocab: list[str]
    labels: list[str]
    params: dict[str, np.ndarray]
    optimizer: OptimizerState | None = None
    epoch: int = 0
    best_metric: float | None = None

    @classmethod
    def from_model(cls, model: BMGFModel, optimizer: OptimizerState | None = None, epoch: int = 0,
                   best_metric: float | None = None) -> "Checkpoint":
        params = {name: p.data.copy() for name, p in model.params.items()}
        opt = OptimizerState.from_dict(optimizer.to_dict()) if optimizer is not None else None
        return cls(model.config, list(model.vocab.tokens), list(model.labels), params, opt, epoch, best_metric)

    def to_model(self) -> BMGFModel:
        params = {}
        for name, value in self.params.items():
            t = Tensor(value.copy(), requires_grad=True)
            t.name = name
            params[name] = t
        return BMGFModel(self.config, Vocabulary(self.vocab), self.labels, params)

    def to_dict(self) -> dict:
        return {
            "format": CHECKPOINT_FORMAT,
            "format_version": CHECKPOINT_VERSION,
            "config": self.config.to_dict(),
            "labels": self.labels,
            "vocab": self.vocab,
            "params": {k: {"shape": list(v.shape), "values": v.ravel().tolist()} for k, v in self.params.items()},
            "optimizer": self.optimizer.to_dict() if self.optimizer is not None else None,
            "epoch": self.epoch,
            "best_metric": self.best_metric,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Checkpoint":
        path = Path(path)
        try:
            d = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"{path}: checkpoint not found") from None
        if d.get("format") != CHECKPOINT_FORMAT or d.get("format_version") != CHECKPOINT_VERSION:
            raise ConfigError(f"{path}: unsupported checkpoint format "
                              f"{d.get('format')!r} version {d.get('format_version')!r}")
        params = {k: np.array(v["values"], dtype=np.float64).reshape(v["shape"]) for k, v in d["params"].items()}
        opt = OptimizerState.from_dict(d["optimizer"]) if d.get("optimizer") else None
        return cls(ModelConfig.from_dict(d["config"]), d["vocab"], d["labels"], params, opt,
                   d["epoch"], d["best_metric"])


# ---------------------------------------------------------------------------
# Inference


def predict_proba(model: BMGFModel, pairs: Sequence[tuple[str, str]]) -> np.ndarray:
    """Class distributions, dropout off, in batches of ``eval_batch_size``."""
    size = model.config.eval_batch_size
    chunks = [model.predict_proba(model.batch(list(pairs[i:i + size]))) for i in range(0, len(pairs), size)]
    return np.concatenate(chunks, axis=0) if chunks else np.zeros((0, len(model.labels)))


def predict_labels(model: BMGFModel, pairs: Sequence[tuple[str, str]]) -> tuple[list[str], np.ndarray]:
    probs = predict_proba(model, pairs)
    return [model.labels[i] for i in probs.argmax(axis=1)], probs


def evaluate_model(model: BMGFModel, instances: Sequence[DiscourseInstance],
                   schema: LabelSchema | None = None) -> EvalReport:
    schema = schema or get_schema(model.config.schema)
    if list(schema.labels) != list(model.labels):
        raise ConfigError(f"schema {schema.name} does not match the model's labels")
    preds, _ = predict_labels(model, [(i.arg1, i.arg2) for i in instances])
    return evaluate(preds, instances, schema)


# ---------------------------------------------------------------------------
# Training


@dataclass
class TrainResult:
    model: BMGFModel
    best: Checkpoint
    last: Checkpoint
    history: list[dict] = field(default_factory=list)


def _gold_indices(instances: Sequence[DiscourseInstance], schema: LabelSchema) -> list[list[int]]:
    return [[schema.index(label) for label in inst.labels] for inst in instances]


def train(config: ModelConfig, instances: Sequence[DiscourseInstance], out_dir: str | Path | None = None,
          vocab: Vocabulary | None = None) -> TrainResult:
    """Mini-batch training with per-epoch validation; keeps the best checkpoint.

    Instances are partitioned by their split tag; both ``train`` and
    ``validation`` must be present.  Deterministic for a given seed.
    """
    schema = get_schema(config.schema)
    train_set, val_set = select(instances, "train"), select(instances, "validation")
    if not train_set:
        raise DataError("no instances tagged 'train'")
    if not val_set:
        raise DataError("no instances tagged 'validation'")
    vocab = vocab or Vocabulary.build([t for i in train_set for t in (i.arg1, i.arg2)], config.vocab_min_count)
    model = BMGFModel(config, vocab, list(schema.labels))
    params = model.trainable()
    opt = OptimizerState(config.lr, config.beta1, config.beta2, config.adam_eps, config.l2)

    tokenized = [tokenize_instance(i.arg1, i.arg2, vocab, config) for i in train_set]
    targets = target_distribution(_gold_indices(train_set, schema), len(schema), config.multi_gold_target)
    order_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 2]))
    dropout_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 3]))

    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        vocab.save(out_path / "vocab.txt")

    def validate(epoch: int, mean_loss: float | None, seconds: float) -> float:
        report = evaluate_model(model, val_set, schema)
        record = {"epoch": epoch, "train_loss": mean_loss, "val_accuracy": report.accuracy,
                  "val_macro_f1": report.macro_f1, "val_metric": report.main_metric, "seconds": seconds}
        history.append(record)
        log.info("epoch %d loss %s val acc %.4f macro-F1 %.4f", epoch,
                 "-" if mean_loss is None else f"{mean_loss:.4f}", report.accuracy, report.macro_f1)
        return report.main_metric

    history: list[dict] = []
    best = Checkpoint.from_model(model, opt, 0, None)
    if config.epochs == 0:
        best.best_metric = validate(0, None, 0.0)
    for epoch in range(1, config.epochs + 1):
        start = time.perf_counter()
        perm = order_rng.permutation(len(train_set))
        losses = []
        for lo in range(0, len(perm), config.batch_size):
            idx = perm[lo:lo + config.batch_size]
            batch = make_batch([tokenized[i] for i in idx], vocab.pad_id)
            model.zero_grad()
            loss = model.loss(batch, targets[idx], dropout_rng)
            loss.backward()
            clip_grad_l2(params, config.clip_threshold)
            adam_step(params, opt)
            losses.append(loss.item())
        metric = validate(epoch, float(np.mean(losses)), time.perf_counter() - start)
        if best.best_metric is None or metric > best.best_metric:
            best = Checkpoint.from_model(model, opt, epoch, metric)
    last = Checkpoint.from_model(model, opt, config.epochs, best.best_metric)

    if out_path is not None:
        best.save(out_path / "best.ckpt.json")
        last.save(out_path / "last.ckpt.json")
        with open(out_path / "train_log.jsonl", "w", encoding="utf-8") as fh:
            for record in history:
                fh.write(json.dumps(record) + "\n")
    return TrainResult(best.to_model(), best, last, history)


# ---------------------------------------------------------------------------
# Ablations

ABLATIONS = [
    ("BMGF", dict()),
    ("w/o SE", dict(use_segment_embeddings=False)),
    ("w/o GF", dict(enable_fusion=False)),
    ("w/o BM", dict(enable_matching=False)),
    ("w/o SE,GF", dict(use_segment_embeddings=False, enable_fusion=False)),
    ("w/o SE,BM", dict(use_segment_embeddings=False, enable_matching=False)),
    ("w/o BM,GF", dict(enable_matching=False, enable_fusion=False)),
    ("w/o SE,BM,GF", dict(use_segment_embeddings=False, enable_matching=False, enable_fusion=False)),
    ("BMGF-Siamese", dict(mode="siamese")),
]


@dataclass
class AblationRow:
    name: str
    config: ModelConfig
    report: EvalReport


def ablate(config: ModelConfig, instances: Sequence[DiscourseInstance], out_dir: str | Path | None = None,
           rows: Sequence[str] | None = None) -> list[AblationRow]:
    """Train and evaluate every switch combination under one seed.

    Evaluation uses the ``test`` split when present, else ``validation``.
    """
    eval_split = "test" if select(instances, "test") else "validation"
    eval_set = select(instances, eval_split)
    results = []
    for name, changes in ABLATIONS:
        if rows is not None and name not in rows:
            continue
        cfg = config.replace(**changes)
        sub = Path(out_dir) / name.replace("/", "").replace(",", "_").replace(" ", "_") if out_dir else None
        result = train(cfg, instances, sub)
        report = evaluate_model(result.model, eval_set)
        log.info("%s: acc %.4f macro-F1 %.4f", name, report.accuracy, report.macro_f1)
        results.append(AblationRow(name, cfg, report))
    return results


def ablation_table(rows: Sequence[AblationRow]) -> str:
    width = max(len(r.name) for r in rows)
    lines = [f"{'Model':<{width}}  {'F1':>6}  {'Acc':>6}"]
    for r in rows:
        lines.append(f"{r.name:<{width}}  {100 * r.report.macro_f1:6.2f}  {100 * r.report.accuracy:6.2f}")
    return "\n".join(lines)
