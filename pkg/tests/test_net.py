"""Compute-engine tests against independent brute-force oracles."""
import numpy as np
import pytest

from skycount.net import (
    AdamState,
    FcnModel,
    ShapeError,
    adam_step,
    backward_and_step,
    bce_loss,
    conv2d,
    forward,
    load_checkpoint,
    param_count,
    save_checkpoint,
)

RNG = np.random.default_rng


# -- oracles -----------------------------------------------------------------


def conv_oracle(x, w, b=None, padding="valid"):
    """Direct quadruple-loop cross-correlation, NCHW, stride 1."""
    cin, h, win = x.shape
    o, cw, k, _ = w.shape
    assert cin == cw
    pad = k // 2 if padding != "valid" else 0
    xp = np.zeros((cin, h + 2 * pad, win + 2 * pad), dtype=np.float64)
    xp[:, pad : pad + h, pad : pad + win] = x
    ho, wo = h + 2 * pad - k + 1, win + 2 * pad - k + 1
    out = np.zeros((o, ho, wo), dtype=np.float64)
    for oc in range(o):
        for y in range(ho):
            for xx in range(wo):
                acc = 0.0
                for c in range(cin):
                    for i in range(k):
                        for j in range(k):
                            acc += xp[c, y + i, xx + j] * w[oc, c, i, j]
                out[oc, y, xx] = acc + (b[oc] if b is not None else 0.0)
    return out


def bce_oracle(p, y, eps=1e-7):
    total = 0.0
    for pi, yi in zip(p, y):
        pc = min(max(float(pi), eps), 1.0 - eps)
        total += -(yi * np.log(pc) + (1 - yi) * np.log(1 - pc))
    return total / len(p)


# -- conv2d ------------------------------------------------------------------


def test_conv_all_ones_kernel_sums_input():
    x = RNG(0).random((1, 1, 5, 5)).astype(np.float32)
    w = np.ones((1, 1, 5, 5), dtype=np.float32)
    out = conv2d(x, w, padding_mode="valid")
    assert out.shape == (1, 1, 1, 1)
    assert np.isclose(out[0, 0, 0, 0], x.sum(), rtol=1e-6)


def test_conv_identity_kernel_preserves_input():
    x = RNG(1).random((3, 9, 9)).astype(np.float32)
    w = np.zeros((3, 3, 5, 5), dtype=np.float32)
    for c in range(3):
        w[c, c, 2, 2] = 1.0
    out = conv2d(x, w, padding_mode="same-zero")
    np.testing.assert_allclose(out, x, atol=1e-7)


@pytest.mark.parametrize("padding", ["valid", "same-zero"])
def test_conv_matches_quadruple_loop_oracle(padding):
    rng = RNG(42)
    x = rng.random((3, 13, 13)).astype(np.float32)
    w = (rng.random((4, 3, 5, 5)) - 0.5).astype(np.float32)
    b = rng.random(4).astype(np.float32)
    got = conv2d(x, w, b, padding_mode=padding)
    want = conv_oracle(x, w, b, padding)
    assert np.abs(got - want).max() <= 1e-5


def test_conv_channel_mismatch_raises():
    x = np.zeros((2, 8, 8), dtype=np.float32)
    w = np.zeros((4, 3, 5, 5), dtype=np.float32)
    with pytest.raises((ShapeError, ValueError)):
        conv2d(x, w)


# -- loss --------------------------------------------------------------------


def test_bce_perfect_predictions():
    y = np.array([0.0, 1.0, 1.0, 0.0])
    assert bce_loss(y, y) <= 1e-6


def test_bce_uniform_half():
    p = np.full(10, 0.5)
    y = (np.arange(10) % 2).astype(np.float64)
    assert np.isclose(bce_loss(p, y), np.log(2.0), atol=1e-9)


def test_bce_matches_scalar_oracle():
    rng = RNG(3)
    p = rng.random(64)
    y = (rng.random(64) > 0.5).astype(np.float64)
    assert np.isclose(bce_loss(p, y), bce_oracle(p, y), atol=1e-6)


def test_bce_length_mismatch_raises():
    with pytest.raises(ShapeError):
        bce_loss(np.zeros(3), np.zeros(4))


# -- model forward -----------------------------------------------------------


@pytest.fixture(scope="module")
def full_model():
    return FcnModel.build((16, 32, 64, 64, 64), final_kernel=11, seed=7)


def test_param_count_full_model(full_model):
    assert param_count(full_model) == 277_745


def test_param_count_components():
    single = FcnModel.build((), final_kernel=5, seed=0, in_channels=3)
    # lone biased 3->1 conv: 75 weights + 1 bias
    assert param_count(single) == 76
    m = FcnModel.build((16,), final_kernel=11, seed=0)
    # 3*16*25 bias-free + 16*121+1 final
    assert param_count(m) == 1200 + 16 * 121 + 1


def test_receptive_field_and_patch_collapse(full_model):
    assert full_model.receptive_field == 51
    x = RNG(5).random((2, 3, 51, 51)).astype(np.float32)
    out = forward(full_model, x, mode="eval", padding_mode="valid")
    assert out.shape == (2, 1, 1, 1)


def test_same_mode_preserves_resolution(full_model):
    img = RNG(6).random((3, 64, 64)).astype(np.float32)
    out = forward(full_model, img, mode="eval")
    assert out.shape == (1, 64, 64)
    assert 0.0 < out.min() and out.max() < 1.0


def test_zero_weights_give_sigmoid_of_bias():
    m = FcnModel.build((4,), final_kernel=3, seed=0)
    for layer in m.layers:
        for p in layer.parameters():
            p[...] = 0.0
    final_conv = [l for l in m.layers if l.kind == "conv"][-1]
    final_conv.bias[...] = 0.7
    img = RNG(7).random((3, 21, 21)).astype(np.float32)
    out = forward(m, img, mode="eval")
    np.testing.assert_allclose(out, 1.0 / (1.0 + np.exp(-0.7)), atol=1e-6)


def test_eval_forward_is_deterministic(full_model):
    img = RNG(8).random((3, 56, 56)).astype(np.float32)
    a = forward(full_model, img, mode="eval")
    b = forward(full_model, img, mode="eval")
    np.testing.assert_array_equal(a, b)


def test_forward_rejects_wrong_channels(full_model):
    with pytest.raises(ShapeError):
        forward(full_model, np.zeros((4, 56, 56), dtype=np.float32))


def test_patch_full_image_agreement_small():
    m = FcnModel.build((4, 6), final_kernel=3, seed=11)
    rf = m.receptive_field
    assert rf == 19
    img = RNG(12).random((3, 48, 48)).astype(np.float32)
    full = forward(m, img, mode="eval")
    half = rf // 2
    rng = RNG(13)
    for _ in range(12):
        y = int(rng.integers(half, 48 - half))
        x = int(rng.integers(half, 48 - half))
        patch = img[:, y - half : y + half + 1, x - half : x + half + 1]
        p = forward(m, patch, mode="eval", padding_mode="valid")
        assert abs(float(p[0, 0, 0]) - float(full[0, y, x])) <= 1e-5


def test_forward_backward_stay_finite(full_model):
    m = full_model.copy()
    batch = RNG(14).random((8, 3, 51, 51)).astype(np.float32)
    labels = (np.arange(8) % 2).astype(np.float32)
    adam = AdamState.for_params(m.parameters())
    loss = backward_and_step(m, batch, labels, adam)
    assert np.isfinite(loss)
    for p in m.parameters():
        assert np.isfinite(p).all()
    for g in m.gradients():
        assert np.isfinite(g).all()


# -- gradients ---------------------------------------------------------------


def _train_loss(model, batch, labels):
    out = model.forward_nhwc(batch, train=True, padding="valid")
    return bce_loss(out.reshape(out.shape[0]), labels)


def test_gradients_match_finite_differences():
    m = FcnModel.build((4, 6), final_kernel=3, seed=21).astype(np.float64)
    rf = m.receptive_field
    rng = RNG(22)
    batch = np.ascontiguousarray(
        rng.random((4, rf, rf, 3), dtype=np.float64) * 2.0 - 0.5
    )
    labels = np.array([1.0, 0.0, 1.0, 0.0])

    out = m.forward_nhwc(batch, train=True, padding="valid")
    probs = out.reshape(4)
    from skycount.net import bce_grad

    m.backward_nhwc(bce_grad(probs, labels).reshape(out.shape))
    analytic = [g.copy() for g in m.gradients()]

    # at coarser steps the FD oracle itself crosses relu/pool kinks and
    # stops being a valid reference; 1e-5 in float64 is bias-free
    eps = 1e-5
    worst = 0.0
    for p, g in zip(m.parameters(), analytic):
        flat = p.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + eps
            lp = _train_loss(m, batch, labels)
            flat[idx] = orig - eps
            lm = _train_loss(m, batch, labels)
            flat[idx] = orig
            fd = (lp - lm) / (2 * eps)
            ga = g.reshape(-1)[idx]
            rel = abs(fd - ga) / max(1e-6, abs(fd), abs(ga))
            worst = max(worst, rel)
    assert worst < 1e-3, f"max relative gradient error {worst}"


def test_adam_zero_gradients_leave_params():
    m = FcnModel.build((4,), final_kernel=3, seed=30)
    params = m.parameters()
    before = [p.copy() for p in params]
    adam = AdamState.for_params(params)
    adam_step(params, [np.zeros_like(p) for p in params], adam)
    for a, b in zip(params, before):
        np.testing.assert_array_equal(a, b)


def test_zero_learning_rate_keeps_params():
    m = FcnModel.build((4,), final_kernel=3, seed=31)
    rf = m.receptive_field
    before = [p.copy() for p in m.parameters()]
    adam = AdamState.for_params(m.parameters(), lr=0.0)
    batch = RNG(32).random((4, 3, rf, rf)).astype(np.float32)
    backward_and_step(m, batch, np.array([1.0, 0.0, 1.0, 0.0]), adam)
    for a, b in zip(m.parameters(), before):
        np.testing.assert_array_equal(a, b)


def test_overfit_fixed_batch():
    m = FcnModel.build((4, 6), final_kernel=3, seed=33)
    rf = m.receptive_field
    rng = RNG(34)
    batch = rng.random((8, 3, rf, rf)).astype(np.float32)
    labels = (np.arange(8) % 2).astype(np.float32)
    adam = AdamState.for_params(m.parameters(), lr=1e-2)
    loss = None
    for _ in range(200):
        loss = backward_and_step(m, batch, labels, adam)
    assert loss < 0.05, f"failed to overfit: loss {loss}"


# -- checkpoints -------------------------------------------------------------


def test_checkpoint_round_trip(tmp_path, full_model):
    m = full_model.copy()
    m.adam_step = 17
    path = save_checkpoint(m, tmp_path / "model.json")
    loaded = load_checkpoint(path)
    assert loaded.adam_step == 17
    assert [s.kind for s in loaded.specs] == [s.kind for s in m.specs]
    img = RNG(40).random((3, 56, 56)).astype(np.float32)
    np.testing.assert_array_equal(forward(m, img), forward(loaded, img))


def test_checkpoint_blob_length_validated(tmp_path, full_model):
    path = save_checkpoint(full_model, tmp_path / "model.json")
    blob = path.with_suffix(".bin")
    data = blob.read_bytes()
    blob.write_bytes(data[:-8])
    with pytest.raises(ValueError):
        load_checkpoint(path)


def test_same_seed_builds_identical_models():
    a = FcnModel.build((16, 32), final_kernel=5, seed=99)
    b = FcnModel.build((16, 32), final_kernel=5, seed=99)
    for pa, pb in zip(a.parameters(), b.parameters()):
        np.testing.assert_array_equal(pa, pb)
