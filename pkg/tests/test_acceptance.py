"""Acceptance gate: one test per primary criterion, each printing a PASS/FAIL line.

Run just this module with ``pytest tests/test_acceptance.py -v``; the summary
lines are repeated in the "acceptance criteria" section at the end.
"""

import os
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

import oracles
from bmgf.aggregation import highway
from bmgf.cli import main
from bmgf.config import ModelConfig, small_config
from bmgf.data import DiscourseInstance, get_schema, label_counts, load_data, select, split_counts
from bmgf.encoder import ContextualizedPair, Vocabulary
from bmgf.fusion import FusionWeights, gated_multi_head, multi_head
from bmgf.matching import (MatchWeights, attentive_matching, max_attentive_matching, maxpooling_matching, multi_cos,
                           pairwise_multi_cos)
from bmgf.metrics import accuracy, macro_f1
from bmgf.model import BMGFModel
from bmgf.synthetic import make_dataset
from bmgf.tensor import Tensor
from bmgf.training import evaluate_model, train

from conftest import WORDS, record


def test_gradient_suite():
    start = time.perf_counter()
    code = main(["gradcheck", "--seeds", "10"])
    seconds = time.perf_counter() - start
    ok = code == 0 and seconds < 60
    record("gradient suite", ok, f"10 seeds, exit {code}, {seconds:.1f}s (limit 60s, tolerance 1e-4)")
    assert ok


def test_shape_suite():
    rng = np.random.default_rng(0)
    vocab = Vocabulary.build([" ".join(WORDS)])
    checked, bad = 0, []
    for l in (1, 4, 16):
        config = small_config(perspectives=l, fusion_heads=1, max_len=48)
        model = BMGFModel(config, vocab, ["a", "b", "c", "d"])
        d, zs = config.hidden_dim, config.summary_dim
        for m in range(1, 21):
            for n in range(1, 21):
                pair = (" ".join(rng.choice(WORDS, m)), " ".join(rng.choice(WORDS, n)))
                trace = model.forward(model.batch([pair]))
                full = trace.match.m1.data[..., :2 * l]
                shapes = {
                    "m1": (trace.match.m1.shape, (1, m + 2, 5 * l)),
                    "m2": (trace.match.m2.shape, (1, n + 2, 5 * l)),
                    "full": (full.shape, (1, m + 2, 2 * l)),
                    "f1": (trace.fused.f1.shape, (1, m + 1, d + 5 * l)),
                    "f2": (trace.fused.f2.shape, (1, n + 1, d + 5 * l)),
                    "o1": (trace.o1.shape, (1, zs)),
                    "o2": (trace.o2.shape, (1, zs)),
                }
                bad += [(l, m, n, k) for k, (got, want) in shapes.items() if tuple(got) != want]
                checked += 1
    ok = not bad
    record("shape suite", ok, f"{checked} (l, M, N) cases, l in {{1,4,16}}, M,N in 1..20, {len(bad)} mismatches")
    assert ok, bad[:5]


def test_oracle_equivalence():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(100):
        d, l = int(rng.integers(1, 6)), int(rng.integers(1, 4))
        m, n = int(rng.integers(0, 6)), int(rng.integers(0, 6))
        h1, h2 = rng.normal(size=(m + 2, d)), rng.normal(size=(n + 2, d))
        w = MatchWeights.init(rng, l, d)
        pair = ContextualizedPair.from_rows(h1, h2)
        for impl, oracle, weight in ((maxpooling_matching, oracles.maxpooling_matching, w.maxpool),
                                     (attentive_matching, oracles.attentive_matching, w.attentive),
                                     (max_attentive_matching, oracles.max_attentive_matching, w.max_attentive)):
            m1, m2 = impl(pair, w)
            r1, r2 = oracle(h1, h2, weight.data)
            worst = max(worst, np.abs(m1.data[0] - r1).max(), np.abs(m2.data[0] - r2).max())
    ok = worst < 1e-10
    record("oracle equivalence", ok, f"100 instances x 3 strategies, max |dev| {worst:.2e} (limit 1e-10)")
    assert ok


def test_gate_and_highway_convexity():
    rng = np.random.default_rng(5)
    violations, elements = 0, 0
    for k in range(1000):
        scale = 10.0 ** rng.uniform(-2, 2)
        if k % 2 == 0:
            dim = 4
            w = FusionWeights.init(rng, dim)
            w.gate.data *= 10.0 ** rng.uniform(-1, 1.5)
            length = int(rng.integers(1, 6))
            x = Tensor(rng.normal(scale=scale, size=(1, length, dim)))
            mask = np.ones((1, length), bool)
            out = gated_multi_head(x, mask, w, 2).data
            a, b = x.data, multi_head(x, mask, w.attention, 2).data
        else:
            dim = 6
            u = Tensor(rng.normal(scale=scale, size=(1, dim)))
            t = Tensor(rng.normal(size=(dim, dim)))
            g = Tensor(rng.normal(scale=10.0 ** rng.uniform(-1, 1.5), size=(dim, 1)))
            out = highway(u, t, g).data
            a, b = u.data, np.maximum(u.data @ t.data, 0.0)
        violations += int(np.sum((out < np.minimum(a, b)) | (out > np.maximum(a, b))))
        elements += out.size
    ok = violations == 0
    record("gate/highway convexity", ok, f"1000 inputs ({elements} elements), {violations} violations")
    assert ok


def test_cosine_bounds():
    rng = np.random.default_rng(9)
    lo, hi, count = np.inf, -np.inf, 0
    for _ in range(500):
        d, l = int(rng.integers(1, 9)), int(rng.integers(1, 5))
        scale = 10.0 ** rng.uniform(-3, 3)
        v1, v2 = rng.normal(scale=scale, size=(4, d)), rng.normal(scale=scale, size=(5, d))
        W = rng.normal(size=(l, d))
        # zero-vector convention cases: zero rows, zero weights, parallel and antiparallel rows
        v1[0] = 0.0
        W[0, : max(1, d // 2)] = 0.0
        v2[1] = 2.5 * v1[1]
        v2[2] = -0.5 * v1[2]
        outs = [multi_cos(v1[:, None, :], v2[None, :, :], W).data,
                pairwise_multi_cos(Tensor(v1[None]), Tensor(v2[None]), W).data]
        for out in outs:
            lo, hi, count = min(lo, out.min()), max(hi, out.max()), count + out.size
    ok = lo >= -1 - 1e-9 and hi <= 1 + 1e-9
    record("cosine bounds", ok, f"{count} values in [{lo:.12f}, {hi:.12f}]")
    assert ok


def test_scoring_rule():
    comp, cont = "Comparison", "Contingency"
    multi = [DiscourseInstance("prices fell", "demand rose", (comp, cont), "test")]
    footnote = accuracy([cont], multi) == 1.0
    schema = get_schema("custom:a,b")
    data = [DiscourseInstance("x", "y", (g,), "test") for g in ("a", "a", "b", "b")]
    macro, _ = macro_f1(["a", "b", "b", "b"], data, schema)
    ok = footnote and abs(macro - 0.7333333333333333) < 1e-6
    record("scoring rule", ok, f"gold {{Comp., Cont.}} predicted Cont. correct={footnote}; 2-class macro-F1 {macro:.6f}")
    assert ok


SCALED = ModelConfig(hidden_dim=64)  # default config scaled down to d=64
_TRAINED = {}


def trained(seed, **changes):
    """Train (once per session) the scaled model on the synthetic data of ``seed``."""
    key = (seed, tuple(sorted(changes.items())))
    if key not in _TRAINED:
        start = time.perf_counter()
        result = train(SCALED.replace(seed=seed, **changes), make_dataset(seed))
        _TRAINED[key] = result, time.perf_counter() - start
    return _TRAINED[key]


def test_overfit_check():
    data = make_dataset(0)
    config = SCALED
    result, seconds = trained(0)
    train_acc = evaluate_model(result.model, select(data, "train")).accuracy
    held_acc = evaluate_model(result.model, select(data, "test")).accuracy
    ok = train_acc >= 0.95 and held_acc >= 0.80 and seconds < 300
    record("overfit check", ok, f"d=64, {config.encoder_layers} layers, {config.epochs} epochs: train {train_acc:.3f} "
           f"(>=0.95), held-out {held_acc:.3f} (>=0.80), {seconds:.0f}s (<300s)")
    assert ok


@pytest.mark.slow
def test_ablation_direction():
    ablations = {"w/o SE": {"use_segment_embeddings": False}, "w/o GF": {"enable_fusion": False},
                 "w/o BM": {"enable_matching": False}}
    holds, cells = 0, []
    for seed in range(3):
        test = select(make_dataset(seed), "test")
        full = evaluate_model(trained(seed)[0].model, test).accuracy
        accs = {name: evaluate_model(trained(seed, **c)[0].model, test).accuracy for name, c in ablations.items()}
        ok = all(full >= acc - 0.02 for acc in accs.values())
        holds += ok
        cells.append(f"seed {seed}: full {full:.2f} " + " ".join(f"{k} {v:.2f}" for k, v in accs.items()))
    record("ablation direction", holds >= 2, f"{holds}/3 seeds hold; " + "; ".join(cells), warn_only=True)
    if holds < 2:
        warnings.warn(f"ablation direction held in only {holds} of 3 seeds")


def test_determinism(tmp_path):
    data = make_dataset(3, {"train": 24, "validation": 8})
    config = small_config(epochs=3, batch_size=8, dropout=0.2, max_len=32)
    train(config, data, tmp_path / "a")
    train(config, data, tmp_path / "b")
    names = ("best.ckpt.json", "last.ckpt.json")
    same = all((tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes() for n in names)
    record("determinism", same, "two seeded runs, best and last checkpoints byte-identical" if same else "checkpoints differ")
    assert same


def test_dataset_bookkeeping():
    source = os.environ.get("BMGF_PDTB_DATA")
    if not source or not Path(source).exists():
        record("dataset bookkeeping", True, "skipped: set BMGF_PDTB_DATA to a converted PDTB instance file or directory")
        pytest.skip("licensed PDTB conversion not available")
    data = load_data(source, get_schema("pdtb4"))
    counts = split_counts(data)
    exp_test = label_counts(data, "test").get("Expansion", 0)
    want = {"train": 12362, "validation": 1183, "test": 1046}
    ok = all(counts.get(k) == v for k, v in want.items()) and exp_test == 574
    record("dataset bookkeeping", ok, f"splits {counts}, Expansion in test {exp_test}")
    assert ok
