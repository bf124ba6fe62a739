"""Binary masks, closed contours, and the pixel grid <-> complex plane mapping.

Masks live on an H x W pixel grid; contours live in the complex domain
D = [-1, 1]^2 (re = x rightwards, im = y downwards, matching row order).
The center of pixel (row r, col c) maps to

    x = (2c + 1) / W - 1,    y = (2r + 1) / H - 1,

so pixel centers never touch the domain boundary while cell corners
(half-integer pixel indices) reach it exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DegenerateContourError, EmptyMaskError, ShapeMismatchError


def pixel_to_complex(rows, cols, height: int, width: int):
    """Map (fractional) pixel indices to points in D. Vectorized."""
    rows = np.asarray(rows, dtype=np.float64)
    cols = np.asarray(cols, dtype=np.float64)
    x = (2.0 * cols + 1.0) / width - 1.0
    y = (2.0 * rows + 1.0) / height - 1.0
    return x + 1j * y


def complex_to_pixel(z, height: int, width: int):
    """Inverse of pixel_to_complex; returns float (rows, cols)."""
    z = np.asarray(z, dtype=np.complex128)
    cols = (z.real + 1.0) * width / 2.0 - 0.5
    rows = (z.imag + 1.0) * height / 2.0 - 0.5
    return rows, cols


@dataclass(frozen=True)
class BinaryMask:
    """Immutable 2D array of {0, 1} pixels."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2 or arr.size == 0:
            raise ShapeMismatchError(f"mask must be a nonempty 2D array, got shape {arr.shape}")
        arr = arr.astype(np.uint8, copy=True)
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("mask values must be 0 or 1")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def is_empty(self) -> bool:
        return not self.data.any()

    def pixel_count(self) -> int:
        return int(self.data.sum())


@dataclass(frozen=True)
class Contour:
    """Closed polygon in D: complex points, CCW (signed area > 0), N >= 3."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.complex128).copy()
        if pts.ndim != 1 or len(pts) < 3:
            raise DegenerateContourError(f"contour needs >= 3 points, got shape {pts.shape}")
        if not np.isfinite(pts).all():
            raise ValueError("contour points must be finite")
        if np.abs(pts.real).max() > 1.0 or np.abs(pts.imag).max() > 1.0:
            raise ValueError("contour points must lie in [-1, 1]^2")
        if (pts == np.roll(pts, -1)).any():
            raise DegenerateContourError("consecutive contour points must be distinct")
        if signed_area(pts) <= 0.0:
            raise DegenerateContourError("contour must be counter-clockwise (signed area > 0)")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def perimeter(self) -> float:
        return float(np.abs(np.roll(self.points, -1) - self.points).sum())

    @property
    def area(self) -> float:
        return signed_area(self.points)


def signed_area(points: np.ndarray) -> float:
    """Shoelace area of a closed polygon given as complex vertices."""
    x, y = points.real, points.imag
    x1, y1 = np.roll(x, -1), np.roll(y, -1)
    return float(0.5 * np.sum(x * y1 - x1 * y))


# Crack-walk transition offsets: for each heading, the pixel on the walker's
# left / right side of the next edge, as offsets from the current corner.
_DIRS = {"N": (-1, 0), "E": (0, 1), "S": (1, 0), "W": (0, -1)}
_SIDE = {
    "E": ((-1, 0), (0, 0)),
    "S": ((0, 0), (0, -1)),
    "W": ((0, -1), (-1, -1)),
    "N": ((-1, -1), (-1, 0)),
}
_LEFT = {"E": "N", "N": "W", "W": "S", "S": "E"}
_RIGHT = {"E": "S", "S": "W", "W": "N", "N": "E"}


def _largest_component(mask: BinaryMask) -> np.ndarray:
    """Boolean grid of the largest 8-connected component (ties: first in scan order)."""
    labels, n = ndimage.label(mask.data, structure=np.ones((3, 3), dtype=np.uint8))
    if n == 0:
        raise EmptyMaskError("mask has no foreground pixels")
    counts = np.bincount(labels.ravel())
    counts[0] = 0
    best = counts.max()
    candidates = np.flatnonzero(counts == best)
    if len(candidates) > 1:
        flat = labels.ravel()
        candidates = sorted(candidates, key=lambda lab: int(np.argmax(flat == lab)))
    return labels == candidates[0]


def trace_boundary(mask: BinaryMask) -> Contour:
    """Outer boundary of the largest component as a CCW contour in D.

    Walks the cracks between foreground and background on the pixel-corner
    lattice, keeping the component on the walker's right.  Diagonal pinches
    (8-connected saddles) are passed through, so the walk covers the whole
    component's outer boundary.  Holes are ignored.
    """
    grid = _largest_component(mask)
    h, w = grid.shape

    def fg(i: int, j: int) -> bool:
        return 0 <= i < h and 0 <= j < w and grid[i, j]

    r0, c0 = np.unravel_index(np.argmax(grid), grid.shape)
    # start corner is the top-left corner of the first foreground pixel in
    # scan order; the row above it is all background, so this corner can
    # never be a saddle and is visited exactly once
    start = (int(r0), int(c0))
    corner, heading = start, "E"
    corners = []
    for _ in range(4 * (h + 1) * (w + 1)):  # each directed crack visited once
        left_off, right_off = _SIDE[heading]
        if fg(corner[0] + left_off[0], corner[1] + left_off[1]):
            heading = _LEFT[heading]
        elif not fg(corner[0] + right_off[0], corner[1] + right_off[1]):
            heading = _RIGHT[heading]
        corners.append(corner)
        di, dj = _DIRS[heading]
        corner = (corner[0] + di, corner[1] + dj)
        if corner == start:
            break
    else:
        raise RuntimeError("boundary walk failed to close")

    ij = np.array(corners, dtype=np.float64)
    pts = pixel_to_complex(ij[:, 0] - 0.5, ij[:, 1] - 0.5, h, w)
    if signed_area(pts) < 0:
        pts = pts[::-1]
        pts = np.roll(pts, 1)  # keep the start corner first
    return Contour(pts)


def resample_closed(contour: Contour, n_points: int) -> Contour:
    """Resample a closed contour to n_points at uniform arc length.

    Sample 0 sits exactly on the contour's first point; samples advance in
    traversal order, so resampling an already-uniform polygon of the same
    length is (numerically) the identity.
    """
    if n_points < 3:
        raise DegenerateContourError(f"need n_points >= 3, got {n_points}")
    pts = contour.points
    closed = np.concatenate([pts, pts[:1]])
    seg = np.abs(np.diff(closed))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    perimeter = cum[-1]
    if perimeter <= 0.0:
        raise DegenerateContourError("contour has zero perimeter")
    s = np.arange(n_points) * (perimeter / n_points)
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    frac = (s - cum[idx]) / seg[idx]
    out = closed[idx] + frac * (closed[idx + 1] - closed[idx])
    return Contour(out)
