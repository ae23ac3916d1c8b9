import json

import numpy as np
import pytest

from bmgf.config import ModelConfig, load_config, save_config, small_config
from bmgf.data import select
from bmgf.errors import ConfigError, DataError
from bmgf.synthetic import MARKERS, make_dataset
from bmgf.training import (ABLATIONS, Checkpoint, ablate, ablation_table, evaluate_model, predict_proba, train)

SIZES = {"train": 12, "validation": 8, "test": 8}


@pytest.fixture(scope="module")
def data():
    return make_dataset(5, SIZES)


def quick(**overrides):
    values = dict(epochs=2, batch_size=4, max_len=32)
    values.update(overrides)
    return small_config(**values)


def test_default_config_values():
    c = ModelConfig()
    assert (c.perspectives, c.fusion_heads, c.conv_ops, c.conv_filters, c.hidden_dim) == (16, 16, 2, 64, 128)
    assert (c.dropout, c.clip_threshold, c.l2, c.lr, c.batch_size, c.epochs) == (0.2, 2.0, 0.0005, 0.001, 32, 50)
    assert (c.fusion_dim, c.summary_dim) == (208, 128)


def test_config_file_round_trip(tmp_path):
    c = ModelConfig(seed=3, mode="siamese")
    save_config(c, tmp_path / "c.json")
    assert load_config(tmp_path / "c.json") == c
    (tmp_path / "partial.json").write_text('{"hidden_dim": 64, "dropout": 0}')
    assert load_config(tmp_path / "partial.json").dropout == 0.0


@pytest.mark.parametrize("text,match", [
    ('{"hidden": 3}', "unknown"), ('{"hidden_dim": "x"}', "integer"), ('{"enable_fusion": 1}', "boolean"),
    ('{"hidden_dim": 10}', "divisible"), ('{"conv_ops": 3}', "conv_ops"), ('[1]', "flat"), ("{", "JSON"),
])
def test_bad_config_files(tmp_path, text, match):
    (tmp_path / "c.json").write_text(text)
    with pytest.raises(ConfigError, match=match):
        load_config(tmp_path / "c.json")


def test_synthetic_dataset_shape():
    data = make_dataset(0)
    assert {k: len(select(data, k)) for k in SIZES} == {"train": 200, "validation": 100, "test": 100}
    for inst in data[:50]:
        (label,) = inst.labels
        assert any(m in inst.arg2.split() for m in MARKERS[label])


def test_training_requires_both_splits(data):
    with pytest.raises(DataError):
        train(quick(), select(data, "train"))


def test_runs_are_bit_identical(data, tmp_path):
    train(quick(dropout=0.2), data, tmp_path / "a")
    train(quick(dropout=0.2), data, tmp_path / "b")
    for name in ("best.ckpt.json", "last.ckpt.json", "vocab.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert len((tmp_path / "a" / "train_log.jsonl").read_text().splitlines()) == 2


def test_zero_epochs_keeps_initialization(data):
    result = train(quick(epochs=0), data)
    assert result.best.epoch == 0 and len(result.history) == 1
    fresh = train(quick(epochs=0), data).best
    for name, value in result.best.params.items():
        np.testing.assert_array_equal(value, fresh.params[name])
    assert result.best.best_metric == result.history[0]["val_metric"]


def test_checkpoint_round_trip(data, tmp_path):
    result = train(quick(), data)
    result.last.save(tmp_path / "ck.json")
    loaded = Checkpoint.load(tmp_path / "ck.json")
    assert loaded.config == result.last.config and loaded.epoch == 2
    model_a, model_b = result.last.to_model(), loaded.to_model()
    pairs = [(i.arg1, i.arg2) for i in data]
    np.testing.assert_array_equal(predict_proba(model_a, pairs), predict_proba(model_b, pairs))
    test = select(data, "test")
    assert evaluate_model(model_a, test).to_dict() == evaluate_model(model_b, test).to_dict()
    assert loaded.optimizer.step == result.last.optimizer.step


def test_checkpoint_version_refused(data, tmp_path):
    ck = train(quick(epochs=0), data).best
    doc = ck.to_dict()
    doc["format_version"] = 99
    (tmp_path / "ck.json").write_text(json.dumps(doc))
    with pytest.raises(ConfigError, match="version"):
        Checkpoint.load(tmp_path / "ck.json")


def test_ablation_removes_parameters(data):
    no_match = train(quick(epochs=0, enable_matching=False), data).best.params
    assert not any(k.startswith("matching.") for k in no_match)
    no_fusion = train(quick(epochs=0, enable_fusion=False), data).best.params
    assert not any(k.startswith("fusion.") for k in no_fusion)
    no_se = train(quick(epochs=0, use_segment_embeddings=False), data).best.params
    assert "encoder.segment_embedding" not in no_se
    # without matching the fused width is d alone, without fusion the concatenation reaches conv_pool
    assert no_match["aggregation.conv1.weight"].shape == (1, 8, 3)
    assert no_fusion["aggregation.conv1.weight"].shape == (1, 8 + 10, 3)


def test_frozen_encoder_trains_only_segment_embeddings(data):
    config = quick(freeze_encoder=True)
    result = train(config, data)
    init = train(config.replace(epochs=0), data).best.params
    for name, value in result.last.params.items():
        if name.startswith("encoder.") and name != "encoder.segment_embedding":
            np.testing.assert_array_equal(value, init[name])
    assert not np.array_equal(result.last.params["encoder.segment_embedding"], init["encoder.segment_embedding"])


def test_untrained_model_near_chance():
    data = make_dataset(1, {"train": 4, "validation": 4, "test": 400})
    model = train(small_config(epochs=0, max_len=32), data).model
    assert 0.1 <= evaluate_model(model, select(data, "test")).accuracy <= 0.45


def test_ablation_table_rows(data, tmp_path):
    rows = ablate(quick(epochs=1), data, tmp_path)
    assert [r.name for r in rows] == [name for name, _ in ABLATIONS] and len(rows) == 9
    assert all(r.config.seed == 0 for r in rows)
    bare = dict((r.name, r) for r in rows)["w/o SE,BM,GF"].config
    assert not (bare.use_segment_embeddings or bare.enable_matching or bare.enable_fusion)
    table = ablation_table(rows)
    assert len(table.splitlines()) == 10
    ck = Checkpoint.load(tmp_path / "wo_SE_BM_GF" / "best.ckpt.json")
    assert not any(k.startswith(("matching.", "fusion.")) for k in ck.params)
