"""Training objective for coefficient regression with heatmap regularization.

For a batch of M samples with predicted coefficients zhat and targets z,

    total = (1/M) * sum_{m,n} [ w_n * (|zhat - z| + |zhat - z|^2)
                                + JS(p_mn || N(mu_mn, sigma * I)) ]

where |.| is the complex modulus, p_mn is the predicted heatmap for sample m
and harmonic n, and the Gaussian target is centered at the heatmap's own
(predicted) expectation mu_mn by default.  A config flag recenters it at the
ground-truth coefficient instead, which then needs the per-coefficient
scales to map coefficient units onto the heatmap grid.

The per-coefficient weights

    w_n = min(1 + 1 / (max_i |z_n^(i)| + eps), WEIGHT_CAP)

are computed once over the whole training set and then frozen.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, NonFiniteLossError, ShapeMismatchError
from .fourier import CoefficientRanges, _as_matrix
from .heatmap import Heatmap, grid_coords

WEIGHT_CAP = 10.0  # fixed upper bound on w_n


@dataclass(frozen=True)
class LossConfig:
    sigma: float = 0.01          # covariance scale of the Gaussian heatmap target
    epsilon: float = 1e-8        # stabilizer in the weight formula
    js_enabled: bool = True
    center_js_at_truth: bool = False  # alternative: Gaussian at z instead of zhat

    def __post_init__(self):
        if self.sigma <= 0 or self.epsilon <= 0:
            raise InvalidParameterError("sigma and epsilon must be positive")


@dataclass(frozen=True)
class LossBreakdown:
    """Per-term values, already weighted and averaged over the batch."""

    l1: float
    l2: float
    js: float

    @property
    def total(self) -> float:
        return self.l1 + self.l2 + self.js


def coefficient_weights(dataset, epsilon: float = 1e-8) -> np.ndarray:
    """Frozen per-coefficient weights from the training set's magnitude peaks."""
    if epsilon <= 0:
        raise InvalidParameterError(f"epsilon must be positive, got {epsilon}")
    mats = _as_matrix(dataset)
    peak = np.abs(mats).max(axis=0)
    return np.minimum(1.0 + 1.0 / (peak + epsilon), WEIGHT_CAP)


def _coerce_heatmaps(heatmaps, m: int, n_coeff: int) -> np.ndarray | None:
    if heatmaps is None:
        return None
    if isinstance(heatmaps, np.ndarray):
        arr = np.asarray(heatmaps, dtype=np.float64)
    else:
        arr = np.stack(
            [
                np.stack([h.values if isinstance(h, Heatmap) else np.asarray(h, dtype=np.float64) for h in row])
                for row in heatmaps
            ]
        )
    if arr.ndim != 4 or arr.shape[:2] != (m, n_coeff):
        raise ShapeMismatchError(f"heatmaps must have shape ({m}, {n_coeff}, H, W), got {arr.shape}")
    return arr


def _target_means(heatmaps, truth, scales):
    """Gaussian target centers in grid units, shape (M, 2k+1) each axis."""
    if truth is None:
        xx, yy = grid_coords(*heatmaps.shape[-2:])
        return np.einsum("...hw,hw->...", heatmaps, xx), np.einsum("...hw,hw->...", heatmaps, yy)
    if scales is None:
        raise InvalidParameterError("truth-centered JS needs coefficient scales")
    return truth.real / scales.scales, truth.imag / scales.scales


def js_terms(
    heatmaps,
    sigma: float,
    truth: np.ndarray | None = None,
    scales: CoefficientRanges | None = None,
) -> np.ndarray:
    """JS(p || Gaussian target) per heatmap; input (..., H, W), output (...)."""
    heatmaps = np.asarray(heatmaps, dtype=np.float64)
    terms, _ = _js_eval(heatmaps, sigma, truth, scales, want_grad=False)
    return terms


def js_terms_with_grad(
    heatmaps,
    sigma: float,
    truth: np.ndarray | None = None,
    scales: CoefficientRanges | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """JS terms plus their exact gradient in the heatmap values.

    With the default prediction-centered target the gradient includes the
    path through the target's mean (which is the heatmap's own expectation);
    with a truth-centered target the mean is constant and only the direct
    0.5*ln(p/m) term remains.
    """
    heatmaps = np.asarray(heatmaps, dtype=np.float64)
    return _js_eval(heatmaps, sigma, truth, scales, want_grad=True)


def _js_eval(p, sigma, truth, scales, want_grad):
    if sigma <= 0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")
    h, w = p.shape[-2:]
    xx, yy = grid_coords(h, w)
    mu_x, mu_y = _target_means(p, truth, scales)
    mu_x = np.asarray(mu_x)[..., None, None]
    mu_y = np.asarray(mu_y)[..., None, None]
    g = np.exp(-((xx - mu_x) ** 2 + (yy - mu_y) ** 2) / (2.0 * sigma))
    g_sum = g.sum(axis=(-2, -1), keepdims=True)
    if (g_sum == 0.0).any():
        raise InvalidParameterError("gaussian target mean too far outside the heatmap grid")
    q = g / g_sum

    mid = 0.5 * (p + q)
    # 0 * log(0 / x) contributes 0; mid > 0 wherever p or q is positive
    ln_p = _masked_log_ratio(p, mid)
    ln_q = _masked_log_ratio(q, mid)
    terms = 0.5 * ((p * ln_p).sum(axis=(-2, -1)) + (q * ln_q).sum(axis=(-2, -1)))
    if not want_grad:
        return terms, None

    grad = 0.5 * ln_p  # direct term (p > 0 at softmax outputs, so ln is finite there)
    if truth is None:
        # target mean moves with the heatmap: dq_j/dmu = q_j*(coord_j - E_q[coord])/sigma
        wq = 0.5 * ln_q * q
        eq_x = (q * xx).sum(axis=(-2, -1), keepdims=True)
        eq_y = (q * yy).sum(axis=(-2, -1), keepdims=True)
        dmu_x = (wq * (xx - eq_x)).sum(axis=(-2, -1), keepdims=True) / sigma
        dmu_y = (wq * (yy - eq_y)).sum(axis=(-2, -1), keepdims=True) / sigma
        grad = grad + dmu_x * xx + dmu_y * yy
    return terms, grad


def _masked_log_ratio(p: np.ndarray, mid: np.ndarray) -> np.ndarray:
    """log(p / mid) where p > 0, else 0 (and mid > 0 is implied there)."""
    ratio = np.ones_like(p)
    np.divide(p, mid, out=ratio, where=mid > 0)
    out = np.zeros_like(p)
    np.log(ratio, out=out, where=p > 0)
    return out


def modulus_terms_with_grad(pred: np.ndarray, truth: np.ndarray, weights: np.ndarray):
    """w*(|d| + |d|^2) terms and their gradient in pred (as a complex carrier).

    Returns (l1_terms, l2_terms, grad) where grad[m, n] = dL/dRe + 1j*dL/dIm
    of the summed (unaveraged) terms.  The |d| subgradient at d = 0 is 0.
    """
    d = pred - truth
    r = np.abs(d)
    l1 = weights * r
    l2 = weights * r**2
    safe_r = np.where(r > 0, r, 1.0)
    grad = weights * d * (np.where(r > 0, 1.0 / safe_r, 0.0) + 2.0)
    return l1, l2, grad


def loss_breakdown(
    pred,
    truth,
    heatmaps=None,
    weights: np.ndarray | None = None,
    config: LossConfig = LossConfig(),
    scales: CoefficientRanges | None = None,
) -> LossBreakdown:
    """Batch loss. pred/truth: (M, 2k+1) complex (or lists of CoefficientVector)."""
    pred = _as_matrix(pred)
    truth = _as_matrix(truth)
    if pred.shape != truth.shape:
        raise ShapeMismatchError(f"pred/truth shapes differ: {pred.shape} vs {truth.shape}")
    m, n_coeff = pred.shape
    if weights is None:
        weights = np.ones(n_coeff)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (n_coeff,):
        raise ShapeMismatchError(f"weights must have shape ({n_coeff},), got {weights.shape}")

    l1_terms, l2_terms, _ = modulus_terms_with_grad(pred, truth, weights)
    l1 = float(l1_terms.sum() / m)
    l2 = float(l2_terms.sum() / m)

    js = 0.0
    hm = _coerce_heatmaps(heatmaps, m, n_coeff)
    if config.js_enabled and hm is not None:
        js = float(js_terms(hm, config.sigma, truth if config.center_js_at_truth else None, scales).sum() / m)
    out = LossBreakdown(l1, l2, js)
    if not np.isfinite(out.total):
        raise NonFiniteLossError(f"non-finite loss: {out}")
    return out
