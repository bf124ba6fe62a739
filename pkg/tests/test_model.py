"""Tests for the toy coefficient-regression network and its hand-written gradients."""

import numpy as np
import pytest

from fcsn.errors import InvalidParameterError, NonFiniteLossError, ShapeMismatchError
from fcsn.fourier import CoefficientRanges
from fcsn.loss import LossConfig, loss_breakdown
from fcsn.model import (
    CONV_CHANNELS,
    DEFAULT_LOGIT_GAIN,
    FC_HIDDEN,
    INPUT_SIZE,
    ToyModel,
    TrainConfig,
    create_model,
    fit,
)

K = 2  # small k keeps finite differencing affordable


def _random_batch(rng, m=2):
    images = rng.uniform(0.2, 0.8, size=(m, INPUT_SIZE, INPUT_SIZE))
    truth = (rng.normal(size=(m, 2 * K + 1)) + 1j * rng.normal(size=(m, 2 * K + 1))) * 0.2
    weights = rng.uniform(0.5, 3.0, size=2 * K + 1)
    return images, truth, weights


def _rel_err(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-4)


# --------------------------------------------------------------- construction


def test_param_count_dsnt():
    model = create_model(k=10, head="dsnt")
    # conv1 8*1*9+8, conv2 16*8*9+16, deconv 16*21*36+21
    assert model.n_params == 80 + 1168 + 12117
    assert sum(v.size for v in model.views.values()) == model.n_params


def test_param_count_fc():
    model = create_model(k=10, head="fc")
    flat = CONV_CHANNELS[1] * 8 * 8
    expected = 80 + 1168 + (flat * FC_HIDDEN + FC_HIDDEN) + (FC_HIDDEN * 42 + 42)
    assert model.n_params == expected


def test_views_alias_flat_params():
    model = create_model(k=K, head="dsnt", seed=5)
    model.views["conv1.b"][0] = 123.0
    assert 123.0 in model.params


def test_bias_init_zero_weights_glorot_bounded():
    model = create_model(k=K, head="fc", seed=9)
    assert not model.views["fc1.b"].any()
    assert not model.views["conv1.b"].any()
    w = model.views["fc1.w"]
    lim = np.sqrt(6.0 / (w.shape[0] + w.shape[1]))
    assert np.abs(w).max() <= lim
    assert np.abs(w).max() > 0.8 * lim  # uniform support is actually used


def test_same_seed_same_init():
    a = create_model(k=K, head="dsnt", seed=3)
    b = create_model(k=K, head="dsnt", seed=3)
    assert np.array_equal(a.params, b.params)
    assert not np.array_equal(a.params, create_model(k=K, head="dsnt", seed=4).params)


def test_create_model_accepts_coefficient_ranges():
    ranges = CoefficientRanges(np.full(2 * K + 1, 0.5))
    model = create_model(k=K, head="dsnt", scales=ranges)
    assert np.array_equal(model.scales, np.full(2 * K + 1, 0.5))


def test_constructor_validation():
    ones = np.ones(2 * K + 1)
    with pytest.raises(InvalidParameterError):
        ToyModel(k=K, head="conv", scales=ones)
    with pytest.raises(InvalidParameterError):
        ToyModel(k=0, head="dsnt", scales=np.ones(1))
    with pytest.raises(InvalidParameterError):
        ToyModel(k=K, head="dsnt", scales=np.ones(2 * K))
    with pytest.raises(InvalidParameterError):
        ToyModel(k=K, head="dsnt", scales=ones * 0.0)
    with pytest.raises(InvalidParameterError):
        ToyModel(k=K, head="dsnt", scales=ones, logit_gain=0.0)
    with pytest.raises(ShapeMismatchError):
        ToyModel(k=K, head="dsnt", scales=ones, params=np.zeros(7))


def test_input_validation():
    model = create_model(k=K, head="dsnt")
    with pytest.raises(ShapeMismatchError):
        model.predict(np.zeros((4, 16, 16)))
    with pytest.raises(InvalidParameterError):
        model.predict(np.full((1, INPUT_SIZE, INPUT_SIZE), 1.5))
    with pytest.raises(InvalidParameterError):
        model.predict(np.full((1, INPUT_SIZE, INPUT_SIZE), -0.1))


# -------------------------------------------------------------------- forward


def test_forward_shapes_dsnt():
    model = create_model(k=K, head="dsnt", seed=1)
    image = np.random.default_rng(0).uniform(size=(INPUT_SIZE, INPUT_SIZE))
    coeffs, heatmaps = model.forward(image)
    assert coeffs.k == K
    assert len(heatmaps) == 2 * K + 1
    assert heatmaps[0].values.shape == (16, 16)
    for hm in heatmaps:
        assert abs(hm.values.sum() - 1.0) < 1e-9


def test_forward_shapes_fc():
    model = create_model(k=K, head="fc", seed=1)
    image = np.random.default_rng(0).uniform(size=(INPUT_SIZE, INPUT_SIZE))
    coeffs, heatmaps = model.forward(image)
    assert coeffs.k == K
    assert heatmaps is None


def test_predict_matches_forward_rows():
    rng = np.random.default_rng(7)
    images, _, _ = _random_batch(rng, m=3)
    model = create_model(k=K, head="dsnt", seed=2)
    batch = model.predict(images)
    assert batch.shape == (3, 2 * K + 1)
    for i in range(3):
        single, _ = model.forward(images[i])
        assert np.array_equal(single.coeffs, batch[i])


def test_dsnt_outputs_bounded_by_scales_for_any_params():
    # the expectation of a PDF over grid cell centers cannot leave the grid
    rng = np.random.default_rng(3)
    scales = np.array([0.1, 0.5, 1.0, 2.0, 0.25])
    for scale_factor in (1.0, 100.0):
        model = create_model(k=K, head="dsnt", scales=scales, seed=4)
        model.params *= scale_factor
        pred = model.predict(rng.uniform(size=(5, INPUT_SIZE, INPUT_SIZE)))
        assert (np.abs(pred.real) <= scales + 1e-12).all()
        assert (np.abs(pred.imag) <= scales + 1e-12).all()


def test_fc_outputs_not_bounded():
    model = create_model(k=K, head="fc", seed=4)
    model.views["fc2.b"][:] = 50.0
    pred = model.predict(np.zeros((1, INPUT_SIZE, INPUT_SIZE)))
    assert np.abs(pred.real).max() > 10.0


# ------------------------------------------------------------------ gradients


@pytest.mark.parametrize("head,js", [("dsnt", True), ("dsnt", False), ("fc", False)])
def test_parameter_gradients_match_finite_differences(head, js):
    rng = np.random.default_rng(11)
    images, truth, weights = _random_batch(rng)
    config = LossConfig(js_enabled=js)
    model = create_model(k=K, head=head, scales=np.full(2 * K + 1, 0.6), seed=6)
    _, grad = model.loss_and_grad(images, truth, weights, config)

    def f(params):
        m = ToyModel(k=K, head=head, scales=np.full(2 * K + 1, 0.6), params=params)
        breakdown, _ = m.loss_and_grad(images, truth, weights, config)
        return breakdown.total

    idx = rng.choice(model.n_params, size=60, replace=False)
    eps = 1e-6
    for i in idx:
        p_hi = model.params.copy()
        p_hi[i] += eps
        p_lo = model.params.copy()
        p_lo[i] -= eps
        fd = (f(p_hi) - f(p_lo)) / (2 * eps)
        assert _rel_err(fd, grad[i]) < 1e-4, f"param {i}: fd={fd} analytic={grad[i]}"


@pytest.mark.parametrize("head", ["dsnt", "fc"])
@pytest.mark.parametrize("axis", ["re", "im"])
def test_input_gradients_match_finite_differences(head, axis):
    rng = np.random.default_rng(13)
    image = rng.uniform(0.3, 0.7, size=(INPUT_SIZE, INPUT_SIZE))
    model = create_model(k=K, head=head, scales=np.full(2 * K + 1, 0.6), seed=8)
    n = 1
    g = model.input_gradient(image, n, axis)
    assert g.shape == (INPUT_SIZE, INPUT_SIZE)

    def unit(img):
        pred, _ = model.forward(img)
        z = pred.get(n)
        return z.real if axis == "re" else z.imag

    eps = 1e-6
    flat = [(r, c) for r in range(0, INPUT_SIZE, 7) for c in range(0, INPUT_SIZE, 7)]
    for r, c in flat:
        hi = image.copy()
        hi[r, c] += eps
        lo = image.copy()
        lo[r, c] -= eps
        fd = (unit(hi) - unit(lo)) / (2 * eps)
        assert _rel_err(fd, g[r, c]) < 1e-4


def test_input_gradient_validation():
    model = create_model(k=K, head="dsnt")
    image = np.zeros((INPUT_SIZE, INPUT_SIZE))
    with pytest.raises(InvalidParameterError):
        model.input_gradient(image, K + 1, "re")
    with pytest.raises(InvalidParameterError):
        model.input_gradient(image, 0, "abs")
    with pytest.raises(ShapeMismatchError):
        model.input_gradient(np.zeros((2, INPUT_SIZE, INPUT_SIZE)), 0, "re")


def test_loss_and_grad_matches_standalone_breakdown():
    rng = np.random.default_rng(17)
    images, truth, weights = _random_batch(rng, m=3)
    model = create_model(k=K, head="dsnt", scales=np.full(2 * K + 1, 0.6), seed=10)
    config = LossConfig(sigma=0.02)
    got, _ = model.loss_and_grad(images, truth, weights, config)

    heatmaps = np.stack([np.stack([h.values for h in model.forward(img)[1]]) for img in images])
    want = loss_breakdown(model.predict(images), truth, heatmaps, weights, config)
    assert abs(got.l1 - want.l1) < 1e-12
    assert abs(got.l2 - want.l2) < 1e-12
    assert abs(got.js - want.js) < 1e-12


def test_loss_and_grad_shape_checks():
    model = create_model(k=K, head="dsnt")
    images = np.zeros((2, INPUT_SIZE, INPUT_SIZE))
    with pytest.raises(ShapeMismatchError):
        model.loss_and_grad(images, np.zeros((2, 2 * K), dtype=complex), np.ones(2 * K + 1))


# ------------------------------------------------------------------- erf maps


def test_erf_map_normalized():
    model = create_model(k=K, head="dsnt", seed=12)
    image = np.random.default_rng(1).uniform(size=(INPUT_SIZE, INPUT_SIZE))
    erf = model.erf_map(image, n=0, axis="re")
    assert erf.shape == (INPUT_SIZE, INPUT_SIZE)
    assert erf.min() >= 0.0
    assert erf.max() == 1.0


def test_erf_map_zero_params_is_all_zero():
    probe = create_model(k=K, head="fc")
    model = ToyModel(k=K, head="fc", scales=np.ones(2 * K + 1), params=np.zeros(probe.n_params))
    erf = model.erf_map(np.full((INPUT_SIZE, INPUT_SIZE), 0.5), n=0, axis="re")
    assert not erf.any()


# ------------------------------------------------------------------- training


def _tiny_dataset(rng, n=6):
    images = rng.uniform(0.1, 0.9, size=(n, INPUT_SIZE, INPUT_SIZE))
    truth = (rng.normal(size=(n, 2 * K + 1)) + 1j * rng.normal(size=(n, 2 * K + 1))) * 0.15
    return images, truth


def test_fit_zero_epochs_is_identity():
    rng = np.random.default_rng(19)
    model = create_model(k=K, head="dsnt", seed=14)
    before = model.params.copy()
    history = fit(model, _tiny_dataset(rng), TrainConfig(epochs=0))
    assert history == []
    assert np.array_equal(model.params, before)


def test_fit_zero_learning_rate_keeps_params():
    rng = np.random.default_rng(23)
    model = create_model(k=K, head="dsnt", seed=14)
    before = model.params.copy()
    history = fit(model, _tiny_dataset(rng), TrainConfig(epochs=2, learning_rate=0.0))
    assert len(history) == 2
    assert np.array_equal(model.params, before)
    assert history[0].total == history[1].total  # same permuted batches, same loss


def test_fit_is_deterministic():
    rng = np.random.default_rng(29)
    images, truth = _tiny_dataset(rng)
    pairs = list(zip(images, truth))  # list-of-pairs dataset form
    runs = []
    for _ in range(2):
        model = create_model(k=K, head="dsnt", seed=15)
        history = fit(model, pairs, TrainConfig(epochs=3, batch_size=4, seed=2))
        runs.append((model.params.copy(), [(h.l1, h.l2, h.js) for h in history]))
    assert np.array_equal(runs[0][0], runs[1][0])
    assert runs[0][1] == runs[1][1]


def test_fit_memorizes_single_sample():
    # Adam on the L1 modulus term dithers at roughly the learning-rate scale,
    # so convergence is to a small plateau rather than machine zero.
    rng = np.random.default_rng(31)
    images, truth = _tiny_dataset(rng, n=1)
    model = create_model(k=K, head="fc", seed=16)
    config = TrainConfig(epochs=600, batch_size=1, learning_rate=3e-3)
    history = fit(model, (images, truth), config, LossConfig(js_enabled=False), weights=np.ones(2 * K + 1))
    assert history[-1].total < history[0].total / 20.0
    assert np.abs(model.predict(images)[0] - truth[0]).max() < 0.05


def test_fit_dsnt_loss_decreases():
    rng = np.random.default_rng(37)
    images, truth = _tiny_dataset(rng)
    truth = truth * 0.5  # keep targets well inside unit scales
    model = create_model(k=K, head="dsnt", seed=17)
    history = fit(model, (images, truth), TrainConfig(epochs=60, learning_rate=3e-3))
    assert history[-1].total < 0.5 * history[0].total


def test_fit_step_callback_and_history_length():
    rng = np.random.default_rng(41)
    seen = []
    model = create_model(k=K, head="dsnt", seed=18)
    fit(
        model,
        _tiny_dataset(rng, n=5),
        TrainConfig(epochs=2, batch_size=2),
        step_callback=lambda epoch, step, b: seen.append((epoch, step)),
    )
    assert seen == [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]


def test_fit_rejects_empty_dataset():
    model = create_model(k=K, head="dsnt")
    with pytest.raises(InvalidParameterError):
        fit(model, [], TrainConfig(epochs=1))


def test_fit_raises_on_non_finite_loss():
    rng = np.random.default_rng(43)
    model = create_model(k=K, head="fc", seed=20)
    model.views["fc2.b"][:] = 1e200  # forces inf in the squared-modulus term
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(NonFiniteLossError) as err:
            fit(model, _tiny_dataset(rng), TrainConfig(epochs=1))
    assert err.value.epoch == 0
    assert err.value.step == 0


def test_train_config_validation():
    with pytest.raises(InvalidParameterError):
        TrainConfig(batch_size=0)
    with pytest.raises(InvalidParameterError):
        TrainConfig(epochs=-1)
    with pytest.raises(InvalidParameterError):
        TrainConfig(learning_rate=-0.1)


# ---------------------------------------------------------------- persistence


def test_checkpoint_roundtrip_exact(tmp_path):
    rng = np.random.default_rng(47)
    model = create_model(k=K, head="dsnt", scales=np.full(2 * K + 1, 0.37), seed=21, logit_gain=8.0)
    fit(model, _tiny_dataset(rng), TrainConfig(epochs=1))
    bin_path, json_path = model.save(tmp_path / "ckpt")
    assert bin_path.exists() and json_path.exists()

    loaded = ToyModel.load(tmp_path / "ckpt")
    assert np.array_equal(loaded.params, model.params)
    assert np.array_equal(loaded.scales, model.scales)
    assert (loaded.k, loaded.head, loaded.seed, loaded.logit_gain) == (K, "dsnt", 21, 8.0)

    image = rng.uniform(size=(INPUT_SIZE, INPUT_SIZE))
    assert np.array_equal(loaded.predict(image[None]), model.predict(image[None]))


def test_checkpoint_sidecar_fields(tmp_path):
    model = create_model(k=K, head="fc", seed=22)
    _, json_path = model.save(tmp_path / "m")
    import json

    sidecar = json.loads(json_path.read_text())
    assert sidecar["format"] == 1
    assert sidecar["head"] == "fc"
    assert sidecar["k"] == K
    assert sidecar["n_params"] == model.n_params
    assert sidecar["input_size"] == INPUT_SIZE
    assert sidecar["logit_gain"] == DEFAULT_LOGIT_GAIN
