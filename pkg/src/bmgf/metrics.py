"""Accuracy with the multi-gold rule, per-class and macro-averaged F1."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import DiscourseInstance, LabelSchema
from .errors import ContractError


def _check(predictions: Sequence[str], instances: Sequence[DiscourseInstance]) -> None:
    if len(predictions) != len(instances):
        raise ContractError(f"{len(predictions)} predictions for {len(instances)} instances")


def accuracy(predictions: Sequence[str], instances: Sequence[DiscourseInstance]) -> float:
    """A prediction counts as correct when it matches any gold label."""
    _check(predictions, instances)
    if not instances:
        return 0.0
    return sum(p in inst.labels for p, inst in zip(predictions, instances)) / len(instances)


def reference_label(prediction: str, gold: Sequence[str]) -> str:
    """Gold row used for the confusion matrix: the prediction if it is gold, else the first gold label."""
    return prediction if prediction in gold else gold[0]


def confusion_matrix(predictions: Sequence[str], instances: Sequence[DiscourseInstance],
                     schema: LabelSchema) -> np.ndarray:
    """Rows are reference (gold) classes, columns predicted classes."""
    _check(predictions, instances)
    matrix = np.zeros((len(schema), len(schema)), dtype=np.int64)
    for pred, inst in zip(predictions, instances):
        matrix[schema.index(reference_label(pred, inst.labels)), schema.index(pred)] += 1
    return matrix


def per_class_scores(matrix: np.ndarray, schema: LabelSchema) -> dict[str, dict[str, float]]:
    out = {}
    for k, label in enumerate(schema.labels):
        tp = float(matrix[k, k])
        predicted = float(matrix[:, k].sum())
        support = float(matrix[k, :].sum())
        precision = tp / predicted if predicted else 0.0
        recall = tp / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        out[label] = {"precision": precision, "recall": recall, "f1": f1, "support": int(support)}
    return out


def macro_f1(predictions: Sequence[str], instances: Sequence[DiscourseInstance],
             schema: LabelSchema) -> tuple[float, dict[str, dict[str, float]]]:
    """Unweighted mean of per-class F1 over every schema class (0/0 counts as 0)."""
    scores = per_class_scores(confusion_matrix(predictions, instances, schema), schema)
    return float(np.mean([s["f1"] for s in scores.values()])), scores


@dataclass
class EvalReport:
    schema: LabelSchema
    accuracy: float
    macro_f1: float
    per_class: dict[str, dict[str, float]]
    confusion: np.ndarray
    n: int

    @property
    def positive_f1(self) -> float | None:
        """F1 of the positive class for one-vs-rest schemas."""
        return self.per_class[self.schema.positive]["f1"] if self.schema.is_binary else None

    @property
    def main_metric(self) -> float:
        return self.macro_f1 if self.schema.name == "pdtb4" else self.accuracy

    def to_dict(self) -> dict:
        out = {
            "schema": self.schema.name,
            "labels": list(self.schema.labels),
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "per_class": self.per_class,
            "confusion": self.confusion.tolist(),
            "n": self.n,
        }
        if self.schema.is_binary:
            out["positive_f1"] = self.positive_f1
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        lines = [f"schema {self.schema.name}  n={self.n}",
                 f"accuracy  {100 * self.accuracy:6.2f}",
                 f"macro-F1  {100 * self.macro_f1:6.2f}"]
        if self.schema.is_binary:
            lines.append(f"F1({self.schema.positive})  {100 * self.positive_f1:6.2f}")
        width = max(len(label) for label in self.schema.labels)
        lines.append(f"{'class':<{width}}  {'P':>6}  {'R':>6}  {'F1':>6}  support")
        for label, s in self.per_class.items():
            lines.append(f"{label:<{width}}  {100 * s['precision']:6.2f}  {100 * s['recall']:6.2f}  "
                         f"{100 * s['f1']:6.2f}  {s['support']}")
        return "\n".join(lines)


def evaluate(predictions: Sequence[str], instances: Sequence[DiscourseInstance], schema: LabelSchema) -> EvalReport:
    matrix = confusion_matrix(predictions, instances, schema)
    scores = per_class_scores(matrix, schema)
    macro = float(np.mean([s["f1"] for s in scores.values()]))
    return EvalReport(schema, accuracy(predictions, instances), macro, scores, matrix, len(instances))
