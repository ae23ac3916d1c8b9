import numpy as np
import pytest

from bmgf.errors import ConfigError, ContractError
from bmgf.fusion import FusionWeights, fuse, gated_multi_head, multi_head
from bmgf.gradcheck import finite_diff_check
from bmgf.nn import linear
from bmgf.tensor import Tensor


def rows(rng, batch, length, dim, scale=1.0):
    return Tensor(rng.normal(scale=scale, size=(batch, length, dim)))


def test_singleton_attention_is_projected_value(rng):
    w = FusionWeights.init(rng, 4)
    x = rows(rng, 1, 1, 4)
    out, attn = multi_head(x, np.ones((1, 1), bool), w.attention, 2, return_weights=True)
    np.testing.assert_array_equal(attn.data, np.ones((1, 2, 1, 1)))
    expected = linear(linear(x, w.attention.wv, w.attention.bv), w.attention.wo, w.attention.bo)
    np.testing.assert_allclose(out.data, expected.data, atol=1e-14)


def test_attention_weights_sum_to_one_over_valid_keys(rng):
    w = FusionWeights.init(rng, 6)
    mask = np.array([[1, 1, 1, 0, 0], [1, 1, 1, 1, 1]], bool)
    _, attn = multi_head(rows(rng, 2, 5, 6), mask, w.attention, 3, return_weights=True)
    np.testing.assert_allclose(attn.data.sum(axis=-1), 1.0, atol=1e-12)
    assert not attn.data[0, :, :, 3:].any()


def test_masked_key_content_is_ignored(rng):
    w = FusionWeights.init(rng, 4)
    x = rows(rng, 1, 4, 4)
    mask = np.array([[1, 1, 0, 1]], bool)
    before = multi_head(x, mask, w.attention, 2).data
    x.data[0, 2] = 100.0
    after = multi_head(x, mask, w.attention, 2).data
    np.testing.assert_array_equal(before[0, [0, 1, 3]], after[0, [0, 1, 3]])


def test_heads_must_divide_width(rng):
    w = FusionWeights.init(rng, 6)
    with pytest.raises(ConfigError):
        multi_head(rows(rng, 1, 3, 6), np.ones((1, 3), bool), w.attention, 4)


def test_closed_gate_returns_input(rng):
    w = FusionWeights.init(rng, 4)
    w.gate.data[:4] = -1e3
    w.gate.data[4:] = 0.0
    x = Tensor(rng.uniform(1, 2, size=(1, 3, 4)))
    out, gate = gated_multi_head(x, np.ones((1, 3), bool), w, 2, return_gate=True)
    assert np.all(gate.data < 1e-300)
    np.testing.assert_array_equal(out.data, x.data)


def test_zero_gate_weights_give_midpoint(rng):
    w = FusionWeights.init(rng, 4)
    w.gate.data[...] = 0.0
    x = rows(rng, 2, 3, 4)
    mask = np.ones((2, 3), bool)
    out, gate = gated_multi_head(x, mask, w, 2, return_gate=True)
    attended = multi_head(x, mask, w.attention, 2).data
    np.testing.assert_array_equal(gate.data, np.full((2, 3, 1), 0.5))
    np.testing.assert_allclose(out.data, 0.5 * (x.data + attended), atol=1e-15)


def test_output_between_input_and_attention(rng):
    for _ in range(50):
        w = FusionWeights.init(rng, 4)
        w.gate.data *= rng.uniform(0.1, 20)
        x = rows(rng, 2, 4, 4, scale=rng.uniform(0.1, 10))
        mask = np.ones((2, 4), bool)
        out, gate = gated_multi_head(x, mask, w, 2, return_gate=True)
        attended = multi_head(x, mask, w.attention, 2).data
        lo, hi = np.minimum(x.data, attended), np.maximum(x.data, attended)
        assert np.all(out.data >= lo - 1e-12) and np.all(out.data <= hi + 1e-12)
        assert np.all((gate.data >= 0) & (gate.data <= 1))


def test_gate_strictly_inside_unit_interval_at_moderate_scale(rng):
    # float64 sigmoid only saturates to exactly 0 or 1 beyond |z| of about 37
    w = FusionWeights.init(rng, 4)
    x = rows(rng, 3, 5, 4)
    _, gate = gated_multi_head(x, np.ones((3, 5), bool), w, 2, return_gate=True)
    assert np.all((gate.data > 0) & (gate.data < 1))


def test_outputs_not_scale_invariant(rng):
    w = FusionWeights.init(rng, 4)
    x = rows(rng, 1, 4, 4)
    mask = np.ones((1, 4), bool)
    out = gated_multi_head(x, mask, w, 2).data
    scaled = gated_multi_head(Tensor(3.0 * x.data), mask, w, 2).data
    assert not np.allclose(scaled, out) and not np.allclose(scaled, 3.0 * out)


def test_disabled_fusion_passes_concatenation_through(rng):
    h1, h2 = rows(rng, 1, 5, 3), rows(rng, 1, 4, 3)
    m1, m2 = rows(rng, 1, 5, 10), rows(rng, 1, 4, 10)
    mask1, mask2 = np.ones((1, 5), bool), np.ones((1, 4), bool)
    out = fuse(h1, mask1, h2, mask2, m1, m2, None, heads=1)
    np.testing.assert_array_equal(out.f1.data, np.concatenate([h1.data, m1.data], axis=-1)[:, 1:])
    np.testing.assert_array_equal(out.f2.data, np.concatenate([h2.data, m2.data], axis=-1)[:, 1:])
    assert out.mask1.shape == (1, 4) and out.mask2.shape == (1, 3)


def test_first_row_flag(rng):
    h1, h2 = rows(rng, 1, 5, 4), rows(rng, 1, 4, 4)
    mask1, mask2 = np.ones((1, 5), bool), np.ones((1, 4), bool)
    w = FusionWeights.init(rng, 4)
    dropped = fuse(h1, mask1, h2, mask2, None, None, w, 2)
    kept = fuse(h1, mask1, h2, mask2, None, None, w, 2, include_first_row=True)
    assert kept.f1.shape == (1, 5, 4) and dropped.f1.shape == (1, 4, 4)
    np.testing.assert_array_equal(kept.f1.data[:, 1:], dropped.f1.data)


def test_fused_width_at_default_dims(rng):
    d, l = 128, 16
    h1, h2 = rows(rng, 1, 4, d), rows(rng, 1, 3, d)
    m1, m2 = rows(rng, 1, 4, 5 * l), rows(rng, 1, 3, 5 * l)
    w = FusionWeights.init(rng, d + 5 * l)
    out = fuse(h1, np.ones((1, 4), bool), h2, np.ones((1, 3), bool), m1, m2, w, 16)
    assert out.f1.shape == (1, 3, 208) and out.f2.shape == (1, 2, 208)


def test_arguments_fused_independently(rng):
    h1, h2 = rows(rng, 1, 5, 3), rows(rng, 1, 4, 3)
    m1, m2 = rows(rng, 1, 5, 5), rows(rng, 1, 4, 5)
    mask1, mask2 = np.ones((1, 5), bool), np.ones((1, 4), bool)
    w = FusionWeights.init(rng, 8)
    before = fuse(h1, mask1, h2, mask2, m1, m2, w, 2)
    h2.data[0, 1:3] += 5.0
    after = fuse(h1, mask1, h2, mask2, m1, m2, w, 2)
    np.testing.assert_array_equal(before.f1.data, after.f1.data)
    assert not np.allclose(before.f2.data, after.f2.data)


def test_padded_rows_stay_zero_and_row_mismatch_rejected(rng):
    h1, h2 = rows(rng, 2, 5, 3), rows(rng, 2, 4, 3)
    mask1 = np.array([[1, 1, 1, 1, 1], [1, 1, 1, 0, 0]], bool)
    mask2 = np.ones((2, 4), bool)
    w = FusionWeights.init(rng, 3)
    out = fuse(h1, mask1, h2, mask2, None, None, w, 1)
    assert not out.f1.data[1, 2:].any()
    with pytest.raises(ContractError):
        fuse(h1, mask1, h2, mask2, rows(rng, 2, 4, 2), rows(rng, 2, 4, 2), w, 1)


def test_fuse_gradient(rng):
    h1, h2 = rows(rng, 2, 4, 2), rows(rng, 2, 3, 2)
    m1, m2 = rows(rng, 2, 4, 2), rows(rng, 2, 3, 2)
    mask1 = np.array([[1, 1, 1, 1], [1, 1, 0, 0]], bool)
    mask2 = np.ones((2, 3), bool)
    w = FusionWeights.init(rng, 4)
    c1, c2 = rng.normal(size=(2, 3, 4)), rng.normal(size=(2, 2, 4))

    def f(_):
        out = fuse(h1, mask1, h2, mask2, m1, m2, w, 2)
        return (out.f1 * c1).sum() + (out.f2 * c2).sum()

    tensors = [h1, h2, m1, m2, w.gate] + list(w.attention.named("a").values())
    assert finite_diff_check(f, tensors) < 1e-4
