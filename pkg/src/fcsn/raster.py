"""Rasterize coefficient curves back into binary masks.

The curve is sampled densely, mapped to continuous pixel coordinates, and
filled with an even-odd scanline rule evaluated at pixel centers: a center is
foreground iff a horizontal ray to its left crosses the polygon an odd number
of times.  The rule is independent of orientation and handles self-crossing
curves; pixels whose centers fall outside the polygon's extent (or the image
frame crops the curve) are simply background.
"""

from __future__ import annotations

import warnings

import numpy as np

from .contour import BinaryMask, complex_to_pixel, signed_area
from .errors import DegenerateCurveWarning, InvalidParameterError
from .fourier import CoefficientVector, evaluate

DEGENERATE_AREA = 1e-12  # enclosed area (in D^2 units) below which a curve is flat


def fill_polygon(points: np.ndarray, height: int, width: int) -> BinaryMask:
    """Even-odd fill of a closed polygon given as complex points in D units."""
    if height < 1 or width < 1:
        raise InvalidParameterError(f"mask size must be positive, got {height}x{width}")
    points = np.asarray(points, dtype=np.complex128)
    if points.ndim != 1 or len(points) < 3:
        raise InvalidParameterError("polygon needs at least 3 vertices")
    if abs(signed_area(points)) < DEGENERATE_AREA:
        warnings.warn("curve encloses no area; returning an empty mask", DegenerateCurveWarning)
        return BinaryMask(np.zeros((height, width), dtype=np.uint8))

    ry, cx = complex_to_pixel(points, height, width)
    ry2, cx2 = np.roll(ry, -1), np.roll(cx, -1)
    grid = np.zeros((height, width), dtype=np.uint8)
    r_lo = max(0, int(np.ceil(ry.min())))
    r_hi = min(height - 1, int(np.floor(ry.max())))
    for r in range(r_lo, r_hi + 1):
        crossing = ((ry <= r) & (ry2 > r)) | ((ry2 <= r) & (ry > r))
        if not crossing.any():
            continue
        t = (r - ry[crossing]) / (ry2[crossing] - ry[crossing])
        xs = np.sort(cx[crossing] + t * (cx2[crossing] - cx[crossing]))
        for xa, xb in xs.reshape(-1, 2):
            c0 = max(0, int(np.ceil(xa)))          # first center >= xa
            c1 = min(width - 1, int(np.ceil(xb)) - 1)  # last center < xb
            if c0 <= c1:
                grid[r, c0 : c1 + 1] = 1
    return BinaryMask(grid)


def rasterize(cv: CoefficientVector, height: int, width: int, n_samples: int = 256) -> BinaryMask:
    """Sample the curve at n_samples uniform parameters and fill it."""
    if n_samples < 3:
        raise InvalidParameterError(f"need n_samples >= 3, got {n_samples}")
    t = np.arange(n_samples) / n_samples
    return fill_polygon(evaluate(cv, t), height, width)
