import numpy as np
import pytest

from fcsn import (
    Heatmap,
    InvalidParameterError,
    ShapeMismatchError,
    dsnt,
    expectation,
    gaussian_target,
    grid_coords,
    js_divergence,
    normalize,
    softmax2d,
)
from fcsn.heatmap import gaussian_values, js_divergence_grad_p
from helpers import brute_js, numeric_grad


def rand_heatmap(rng, h=8, w=8):
    v = rng.random((h, w)) + 1e-3
    return v / v.sum()


def test_grid_coords_hand_values():
    xx, yy = grid_coords(4, 4)
    assert np.allclose(xx[0], [-0.75, -0.25, 0.25, 0.75], atol=1e-15)
    assert np.allclose(yy[:, 0], [-0.75, -0.25, 0.25, 0.75], atol=1e-15)
    assert xx.shape == yy.shape == (4, 4)


def test_grid_coords_rectangular():
    xx, yy = grid_coords(2, 4)
    assert np.allclose(yy[:, 0], [-0.5, 0.5], atol=1e-15)
    assert np.allclose(xx[0], [-0.75, -0.25, 0.25, 0.75], atol=1e-15)


def test_softmax_uniform_on_constant():
    p = softmax2d(np.full((4, 4), 3.7))
    assert np.allclose(p, 1.0 / 16.0, atol=1e-15)


def test_softmax_shift_invariance():
    rng = np.random.default_rng(4)
    logits = rng.standard_normal((6, 5))
    assert np.allclose(softmax2d(logits), softmax2d(logits + 123.4), atol=1e-12)


def test_softmax_handles_batches():
    rng = np.random.default_rng(5)
    logits = rng.standard_normal((3, 4, 4))
    p = softmax2d(logits)
    assert p.shape == (3, 4, 4)
    assert np.allclose(p.sum(axis=(-2, -1)), 1.0, atol=1e-12)
    for i in range(3):
        assert np.allclose(p[i], softmax2d(logits[i]), atol=1e-15)


def test_softmax_extreme_logits_stable():
    logits = np.zeros((4, 4))
    logits[2, 3] = 1000.0
    p = softmax2d(logits)
    assert np.isfinite(p).all()
    assert p[2, 3] == pytest.approx(1.0)


def test_normalize_returns_heatmap_preserving_argmax():
    rng = np.random.default_rng(6)
    logits = rng.standard_normal((8, 8))
    hm = normalize(logits)
    assert isinstance(hm, Heatmap)
    assert np.unravel_index(hm.values.argmax(), hm.shape) == np.unravel_index(
        logits.argmax(), logits.shape
    )
    with pytest.raises(ShapeMismatchError):
        normalize(np.zeros((2, 2, 2)))


def test_heatmap_validation():
    with pytest.raises(ValueError):
        Heatmap(np.full((2, 2), 0.5))  # sums to 2
    bad = np.full((2, 2), 0.25)
    bad[0, 0] = -0.25
    bad[0, 1] = 0.75
    with pytest.raises(ValueError):
        Heatmap(bad)
    with pytest.raises(ValueError):
        Heatmap(np.array([[np.nan, 0.5], [0.25, 0.25]]))
    with pytest.raises(ShapeMismatchError):
        Heatmap(np.full(4, 0.25))


def test_expectation_of_delta_is_cell_center():
    v = np.zeros((4, 4))
    v[1, 2] = 1.0
    assert expectation(v) == 0.25 - 0.25j


def test_expectation_of_uniform_is_origin():
    v = np.full((6, 6), 1.0 / 36.0)
    assert abs(expectation(v)) < 1e-15


def test_dsnt_scales_and_bounds():
    rng = np.random.default_rng(8)
    for _ in range(20):
        hm = Heatmap(rand_heatmap(rng))
        z = dsnt(hm, scale=0.7)
        assert abs(z.real) <= 0.7 and abs(z.imag) <= 0.7
        assert z == pytest.approx(0.7 * expectation(hm.values), abs=1e-15)
    with pytest.raises(InvalidParameterError):
        dsnt(hm, scale=0.0)


def test_gaussian_peak_and_symmetry():
    g = gaussian_values(0.0, 0.0, 0.05, 16, 16)
    assert g.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.array_equal(g, g[::-1, :])
    assert np.array_equal(g, g[:, ::-1])
    # centered between the two middle cells: expectation is the origin
    assert abs(expectation(g)) < 1e-15


def test_gaussian_tracks_mean():
    g = gaussian_values(0.5, -0.25, 0.002, 16, 16)
    r, c = np.unravel_index(g.argmax(), g.shape)
    xx, yy = grid_coords(16, 16)
    assert abs(xx[r, c] - 0.5) <= 1.0 / 16.0  # nearest cell center
    assert abs(yy[r, c] + 0.25) <= 1.0 / 16.0
    assert expectation(g) == pytest.approx(0.5 - 0.25j, abs=0.02)


def test_gaussian_validation():
    with pytest.raises(InvalidParameterError):
        gaussian_values(0.0, 0.0, 0.0, 8, 8)
    with pytest.raises(InvalidParameterError):
        gaussian_values(1e6, 0.0, 0.001, 8, 8)  # underflows to all zeros


def test_gaussian_target_maps_mean_by_scale():
    # scale 0.5 keeps the division exact in binary floating point
    t = gaussian_target(0.1 - 0.3j, 0.01, 16, 16, scale=0.5)
    direct = gaussian_values(0.2, -0.6, 0.01, 16, 16)
    assert np.array_equal(t.values, direct)
    with pytest.raises(InvalidParameterError):
        gaussian_target(0j, 0.01, 16, 16, scale=-1.0)


def test_js_matches_definition_oracle():
    rng = np.random.default_rng(12)
    for _ in range(10):
        p = rand_heatmap(rng)
        q = rand_heatmap(rng)
        assert js_divergence(p, q) == pytest.approx(brute_js(p, q), abs=1e-12)


def test_js_identity_symmetry_bounds():
    rng = np.random.default_rng(13)
    p = rand_heatmap(rng)
    q = rand_heatmap(rng)
    assert js_divergence(p, p) == 0.0
    assert js_divergence(p, q) == js_divergence(q, p)
    assert 0.0 <= js_divergence(p, q) <= np.log(2.0) + 1e-12


def test_js_disjoint_supports_is_ln2():
    p = np.zeros((4, 4))
    q = np.zeros((4, 4))
    p[0, 0] = 1.0
    q[3, 3] = 1.0
    assert js_divergence(p, q) == np.log(2.0)


def test_js_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        js_divergence(np.full((2, 2), 0.25), np.full((4, 4), 1 / 16))


def test_js_gradient_matches_finite_differences():
    rng = np.random.default_rng(14)
    p = rand_heatmap(rng, 6, 6)
    q = rand_heatmap(rng, 6, 6)
    g = js_divergence_grad_p(p, q)
    fd = numeric_grad(lambda x: js_divergence(x.reshape(6, 6), q), p.ravel(), eps=1e-8)
    assert np.abs(g.ravel() - fd).max() < 1e-6
