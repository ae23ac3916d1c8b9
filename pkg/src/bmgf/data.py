"""Label schemas, discourse instances and the tab-separated instance format.

Instance files are UTF-8 with a header line and one instance per line::

    split<TAB>labels<TAB>arg1<TAB>arg2

``labels`` holds one or more senses separated by ``|``; ``split`` is one of
train, validation, test, blind.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .encoder import tokenize
from .errors import ConfigError, DataError

log = logging.getLogger(__name__)

HEADER = ("split", "labels", "arg1", "arg2")
SPLITS = ("train", "validation", "test", "blind")

PDTB4 = ("Comparison", "Contingency", "Expansion", "Temporal")
PDTB11 = (
    "Comparison.Concession", "Comparison.Contrast",
    "Contingency.Cause", "Contingency.Pragmatic cause",
    "Expansion.Alternative", "Expansion.Conjunction", "Expansion.Instantiation",
    "Expansion.List", "Expansion.Restatement",
    "Temporal.Asynchronous", "Temporal.Synchrony",
)
CONLL15 = (
    "Comparison.Concession", "Comparison.Contrast",
    "Contingency.Cause.Reason", "Contingency.Cause.Result", "Contingency.Condition",
    "EntRel",
    "Expansion.Alternative", "Expansion.Alternative.Chosen alternative",
    "Expansion.Conjunction", "Expansion.Exception", "Expansion.Instantiation", "Expansion.Restatement",
    "Temporal.Asynchronous.Precedence", "Temporal.Asynchronous.Succession", "Temporal.Synchrony",
)
ABBREVIATIONS = {"Comp.": "Comparison", "Cont.": "Contingency", "Exp.": "Expansion", "Temp.": "Temporal"}


@dataclass(frozen=True)
class LabelSchema:
    name: str
    labels: tuple[str, ...]
    positive: str | None = None  # set for binary:<class> schemas

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    @property
    def is_binary(self) -> bool:
        return self.positive is not None

    def parent(self, raw: str) -> str:
        """Map a sense of any depth onto this schema's granularity."""
        raw = ABBREVIATIONS.get(raw, raw)
        if raw in self.labels:
            return raw
        if self.name == "pdtb4" or self.is_binary:
            return raw.split(".")[0]
        if self.name == "pdtb11":
            return ".".join(raw.split(".")[:2])
        return raw

    def normalize(self, raw_labels: Iterable[str]) -> tuple[str, ...]:
        """Validated gold labels, deduplicated, first-listed order kept."""
        out: list[str] = []
        for raw in raw_labels:
            label = self.parent(raw.strip())
            if self.is_binary:
                label = self.positive if label == self.positive else negative_label(self.positive)
            if label not in self.labels:
                raise DataError(f"unknown label {raw!r} under schema {self.name}")
            if label not in out:
                out.append(label)
        if not out:
            raise DataError("empty gold label set")
        if self.is_binary and self.positive in out:
            out = [self.positive]
        return tuple(out)


def negative_label(positive: str) -> str:
    return f"Non-{positive}"


def get_schema(name: str) -> LabelSchema:
    """pdtb4 | pdtb11 | conll15 | binary:<pdtb4 class> | custom:<a>,<b>,..."""
    if name == "pdtb4":
        return LabelSchema("pdtb4", PDTB4)
    if name == "pdtb11":
        return LabelSchema("pdtb11", PDTB11)
    if name == "conll15":
        return LabelSchema("conll15", CONLL15)
    if name.startswith("binary:"):
        positive = ABBREVIATIONS.get(name[7:], name[7:])
        if positive not in PDTB4:
            raise ConfigError(f"binary schema needs a top-level PDTB class, got {positive!r}")
        return LabelSchema(f"binary:{positive}", (negative_label(positive), positive), positive)
    if name.startswith("custom:"):
        labels = tuple(x.strip() for x in name[7:].split(",") if x.strip())
        if len(labels) < 2 or len(set(labels)) != len(labels):
            raise ConfigError(f"custom schema needs at least two distinct labels: {name!r}")
        return LabelSchema(name, labels)
    raise ConfigError(f"unknown label schema {name!r}")


@dataclass(frozen=True)
class DiscourseInstance:
    arg1: str
    arg2: str
    labels: tuple[str, ...]
    split: str
    source_id: str = ""
    raw_labels: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if not self.labels:
            raise DataError(f"{self.source_id}: empty gold label set")
        if not tokenize(self.arg1) or not tokenize(self.arg2):
            raise DataError(f"{self.source_id}: empty argument")


def parse_line(line: str, schema: LabelSchema, source_id: str) -> DiscourseInstance:
    cols = line.split("\t")
    if len(cols) != 4:
        raise DataError(f"{source_id}: expected 4 tab-separated columns, found {len(cols)}")
    split, labels, arg1, arg2 = cols
    if split not in SPLITS:
        raise DataError(f"{source_id}: unknown split {split!r}")
    raw = tuple(labels.split("|"))
    try:
        gold = schema.normalize(raw)
    except DataError as exc:
        raise DataError(f"{source_id}: {exc}") from None
    if not tokenize(arg1) or not tokenize(arg2):
        raise DataError(f"{source_id}: empty argument")
    return DiscourseInstance(arg1, arg2, gold, split, source_id, raw)


def load_dataset(path: str | Path, schema: LabelSchema) -> list[DiscourseInstance]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: dataset file not found")
    lines = path.read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or tuple(lines[0].split("\t")) != HEADER:
        raise DataError(f"{path}:1: header must be {'<TAB>'.join(HEADER)}")
    instances = [parse_line(line, schema, f"{path}:{i}") for i, line in enumerate(lines[1:], start=2)]
    counts = split_counts(instances)
    log.info("%s: %d instances (%s)", path, len(instances),
             ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    return instances


def load_data(path: str | Path, schema: LabelSchema) -> list[DiscourseInstance]:
    """A single instance file, or every ``*.tsv`` file in a directory (sorted by name)."""
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.tsv"))
        if not files:
            raise DataError(f"{path}: no .tsv files found")
        return [inst for f in files for inst in load_dataset(f, schema)]
    return load_dataset(path, schema)


def dumps(instances: Iterable[DiscourseInstance]) -> str:
    rows = ["\t".join(HEADER)]
    for inst in instances:
        labels = inst.raw_labels or inst.labels
        rows.append("\t".join((inst.split, "|".join(labels), inst.arg1, inst.arg2)))
    return "\n".join(rows) + "\n"


def save_dataset(instances: Iterable[DiscourseInstance], path: str | Path) -> None:
    Path(path).write_text(dumps(instances), encoding="utf-8")


def split_counts(instances: Iterable[DiscourseInstance]) -> dict[str, int]:
    return dict(Counter(inst.split for inst in instances))


def label_counts(instances: Iterable[DiscourseInstance], split: str | None = None) -> dict[str, int]:
    """Instances per label (multi-gold instances count once per gold label)."""
    counts: Counter = Counter()
    for inst in instances:
        if split is None or inst.split == split:
            counts.update(inst.labels)
    return dict(counts)


def select(instances: Iterable[DiscourseInstance], split: str) -> list[DiscourseInstance]:
    return [inst for inst in instances if inst.split == split]


def one_vs_rest(instances: Iterable[DiscourseInstance], schema: LabelSchema,
                positive: str) -> tuple[list[DiscourseInstance], LabelSchema]:
    """Relabel instances as positive iff ``positive`` is among their gold labels."""
    positive = ABBREVIATIONS.get(positive, positive)
    if positive not in schema.labels:
        raise ConfigError(f"one_vs_rest: {positive!r} is not a class of schema {schema.name}")
    binary = get_schema(f"binary:{positive}")
    out = []
    for inst in instances:
        label = positive if positive in inst.labels else negative_label(positive)
        out.append(DiscourseInstance(inst.arg1, inst.arg2, (label,), inst.split, inst.source_id, (label,)))
    return out, binary
