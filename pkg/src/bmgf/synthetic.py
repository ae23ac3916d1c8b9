"""Synthetic 4-class pairs whose relation is fixed by a planted connective-like token.

The relation is signalled by one marker token somewhere in arg2.  Half the
instances also carry a marker of another class in arg1 as a distractor, so a
model has to know which argument a token belongs to.
"""

from __future__ import annotations

import numpy as np

from .data import PDTB4, DiscourseInstance

MARKERS = {
    "Comparison": ("however", "although", "whereas"),
    "Contingency": ("because", "therefore", "consequently"),
    "Expansion": ("moreover", "furthermore", "specifically"),
    "Temporal": ("then", "afterwards", "meanwhile"),
}
FILLER = tuple(
    "the a company market price share bank year report analyst trade stock rate plan board "
    "investor fund deal sale growth profit loss quarter chief officer firm group unit debt "
    "bond index economy policy government official court law worker union contract".split()
)


def _sentence(rng: np.random.Generator, length: int) -> list[str]:
    return list(rng.choice(FILLER, size=length))


def make_instance(rng: np.random.Generator, label: str, split: str, ident: str) -> DiscourseInstance:
    arg1 = _sentence(rng, int(rng.integers(4, 11)))
    arg2 = _sentence(rng, int(rng.integers(4, 11)))
    arg2.insert(int(rng.integers(0, len(arg2) + 1)), str(rng.choice(MARKERS[label])))
    if rng.random() < 0.5:
        other = [c for c in PDTB4 if c != label][int(rng.integers(0, 3))]
        arg1.insert(int(rng.integers(0, len(arg1) + 1)), str(rng.choice(MARKERS[other])))
    return DiscourseInstance(" ".join(arg1), " ".join(arg2), (label,), split, ident, (label,))


def make_dataset(seed: int = 0, sizes: dict[str, int] | None = None) -> list[DiscourseInstance]:
    """Balanced instances per split (default 200 train / 100 validation / 100 test)."""
    sizes = sizes or {"train": 200, "validation": 100, "test": 100}
    rng = np.random.default_rng(seed)
    out = []
    for split, count in sizes.items():
        labels = [PDTB4[i % 4] for i in range(count)]
        rng.shuffle(labels)
        out.extend(make_instance(rng, label, split, f"synthetic:{split}:{i}") for i, label in enumerate(labels))
    return out
