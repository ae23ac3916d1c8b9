"""Central finite-difference gradient checks, per primitive and per module."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .aggregation import target_distribution
from .config import ModelConfig, small_config
from .encoder import Vocabulary
from .errors import ContractError
from .model import BMGFModel
from .tensor import Tensor, backward

TOLERANCE = 1e-4


def finite_diff_check(f: Callable[[Tensor], Tensor], x: Tensor | Sequence[Tensor], step: float = 1e-5,
                      max_coords: int | None = None, rng: np.random.Generator | None = None) -> float:
    """Max over coordinates of |analytic - central difference| / max(1, |analytic|).

    ``x`` may be one tensor or several; ``f`` is called with the same argument
    each time and must read the tensors' current values.  With ``max_coords``
    only that many randomly chosen coordinates per tensor are probed.
    """
    if not 0 < step <= 1e-2:
        raise ContractError(f"finite_diff_check: step must lie in (0, 1e-2], got {step}")
    tensors = [x] if isinstance(x, Tensor) else list(x)
    first, second = f(x).data, f(x).data
    if not np.array_equal(first, second):
        raise ContractError("finite_diff_check: f is not deterministic")
    saved = [t.grad for t in tensors]
    for t in tensors:
        t.grad = np.zeros_like(t.data)
        t.requires_grad = True
    backward(f(x))
    analytic = [t.grad.copy() for t in tensors]
    rng = rng or np.random.default_rng(0)
    worst = 0.0
    try:
        for t, grad in zip(tensors, analytic):
            flat = t.data.reshape(-1)
            coords = np.arange(flat.size)
            if max_coords is not None and flat.size > max_coords:
                coords = rng.choice(flat.size, size=max_coords, replace=False)
            for i in coords:
                original = flat[i]
                flat[i] = original + step
                up = float(f(x).data)
                flat[i] = original - step
                down = float(f(x).data)
                flat[i] = original
                numeric = (up - down) / (2.0 * step)
                a = grad.reshape(-1)[i]
                worst = max(worst, abs(a - numeric) / max(1.0, abs(a)))
    finally:
        for t, g in zip(tensors, saved):
            t.grad = g
    return worst


# ---------------------------------------------------------------------------
# Whole-model check, one entry per module

MODULE_PREFIXES = {
    "encoder": ("encoder.",),
    "matching": ("matching.",),
    "fusion": ("fusion.",),
    "aggregation": ("aggregation.",),
    "prediction": ("classifier.",),
}

_WORDS = "the market fell because rates rose but investors stayed calm then prices recovered".split()


@dataclass
class GradcheckReport:
    seed: int
    errors: dict[str, float] = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(e < TOLERANCE for e in self.errors.values())


def _small_problem(config: ModelConfig, seed: int):
    rng = np.random.default_rng(seed)
    vocab = Vocabulary.build([" ".join(_WORDS)])
    labels = ["Comparison", "Contingency", "Expansion", "Temporal"]
    model = BMGFModel(config.replace(seed=seed), vocab, labels)
    pairs = []
    for _ in range(2):
        m, n = rng.integers(1, 3, size=2)  # at most 6 tokens per argument incl. specials
        pairs.append((" ".join(rng.choice(_WORDS, m)), " ".join(rng.choice(_WORDS, n))))
    batch = model.batch(pairs)
    gold = [[int(rng.integers(len(labels)))], [int(g) for g in rng.choice(len(labels), 2, replace=False)]]
    targets = target_distribution(gold, len(labels))
    return model, batch, targets


def check_model(seed: int, config: ModelConfig | None = None, max_coords: int = 12,
                step: float = 1e-5) -> GradcheckReport:
    """Finite-difference check of the full forward + loss, parameters grouped by module."""
    config = config or small_config()
    if config.hidden_dim > 16 or config.perspectives > 3:
        raise ContractError("gradcheck requires d <= 16 and l <= 3")
    start = time.perf_counter()
    model, batch, targets = _small_problem(config.replace(dropout=0.0), seed)
    report = GradcheckReport(seed)
    rng = np.random.default_rng(seed + 1000)

    def f(_):
        return model.loss(batch, targets)

    for module, prefixes in MODULE_PREFIXES.items():
        tensors = [p for name, p in model.params.items() if name.startswith(prefixes) and p.requires_grad]
        if not tensors:
            continue
        report.errors[module] = finite_diff_check(f, tensors, step=step, max_coords=max_coords, rng=rng)
    report.seconds = time.perf_counter() - start
    return report
