"""Spatial-softmax heatmaps and the differentiable expectation (DSNT) head.

A heatmap is a discrete probability distribution over an H x W grid whose
cell (r, c) carries the coordinate x_c = -1 + (2c+1)/W, y_r = -1 + (2r+1)/H,
i.e. cell centers of the complex domain D.  The DSNT readout is the scaled
expectation

    zhat = scale * sum_{r,c} h[r, c] * (x_c + 1j*y_r),

so |Re zhat| and |Im zhat| are bounded by the scale.  Gaussian target maps
and the Jensen-Shannon divergence (natural log, so JS <= ln 2) support the
heatmap regularization term of the training loss.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidParameterError, ShapeMismatchError

SUM_TOL = 1e-9


@lru_cache(maxsize=32)
def _grid(height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    x = -1.0 + (2.0 * np.arange(width) + 1.0) / width
    y = -1.0 + (2.0 * np.arange(height) + 1.0) / height
    xx, yy = np.meshgrid(x, y)
    xx.setflags(write=False)
    yy.setflags(write=False)
    return xx, yy


def grid_coords(height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    """Cell-center coordinate grids (X, Y), each H x W, values in (-1, 1)."""
    return _grid(height, width)


@dataclass(frozen=True)
class Heatmap:
    """Nonnegative H x W array summing to 1 (within SUM_TOL)."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64).copy()
        if arr.ndim != 2 or arr.size == 0:
            raise ShapeMismatchError(f"heatmap must be a nonempty 2D array, got shape {arr.shape}")
        if (arr < 0).any() or not np.isfinite(arr).all():
            raise ValueError("heatmap values must be finite and nonnegative")
        if abs(arr.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"heatmap must sum to 1, got {arr.sum()!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def softmax2d(logits: np.ndarray) -> np.ndarray:
    """Spatial softmax over the trailing two axes (max-shifted for stability)."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=(-2, -1), keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=(-2, -1), keepdims=True)


def normalize(logits: np.ndarray) -> Heatmap:
    """Spatial softmax of a 2D logit array; preserves the argmax cell."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 2:
        raise ShapeMismatchError(f"logits must be 2D, got shape {logits.shape}")
    return Heatmap(softmax2d(logits))


def expectation(values: np.ndarray) -> complex:
    """Unscaled heatmap expectation sum h * (x + 1j*y) on the cell-center grid."""
    values = np.asarray(values, dtype=np.float64)
    xx, yy = _grid(*values.shape)
    return complex(np.sum(values * xx) + 1j * np.sum(values * yy))


def dsnt(hm: Heatmap, scale: float = 1.0) -> complex:
    """Scaled expectation readout; bounded by |Re|,|Im| <= scale."""
    if scale <= 0:
        raise InvalidParameterError(f"scale must be positive, got {scale}")
    return scale * expectation(hm.values)


def gaussian_values(mean_x: float, mean_y: float, sigma: float, height: int, width: int) -> np.ndarray:
    """Renormalized isotropic Gaussian (covariance sigma * I) sampled at cell centers."""
    if sigma <= 0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")
    xx, yy = _grid(height, width)
    g = np.exp(-((xx - mean_x) ** 2 + (yy - mean_y) ** 2) / (2.0 * sigma))
    total = g.sum()
    if total == 0.0:  # mean so far outside D that every sample underflows
        raise InvalidParameterError(f"gaussian mean ({mean_x}, {mean_y}) too far outside the grid")
    return g / total


def gaussian_target(mean: complex, sigma: float, height: int, width: int, scale: float = 1.0) -> Heatmap:
    """Gaussian heatmap centered at a coefficient value, mapped to grid units by 1/scale."""
    if scale <= 0:
        raise InvalidParameterError(f"scale must be positive, got {scale}")
    return Heatmap(gaussian_values(mean.real / scale, mean.imag / scale, sigma, height, width))


def js_divergence(p, q) -> float:
    """Jensen-Shannon divergence with natural log; 0*log(0/x) terms are 0."""
    p = p.values if isinstance(p, Heatmap) else np.asarray(p, dtype=np.float64)
    q = q.values if isinstance(q, Heatmap) else np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ShapeMismatchError(f"distribution shapes differ: {p.shape} vs {q.shape}")
    m = 0.5 * (p + q)
    return float(_kl(p, m) + _kl(q, m)) * 0.5


def _kl(p: np.ndarray, m: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / m[mask])))


def js_divergence_grad_p(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Gradient of js_divergence(p, q) in p (q held fixed): 0.5 * ln(p / m).

    Exact for the unnormalized expression as well, which is what a finite
    difference probe perturbs.  Cells with p == 0 get gradient 0.5*ln(0) ->
    -inf in theory; they are returned as 0 because the loss only evaluates
    this at softmax outputs, which are strictly positive.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    m = 0.5 * (p + q)
    out = np.zeros_like(p)
    mask = p > 0
    out[mask] = 0.5 * np.log(p[mask] / m[mask])
    return out
