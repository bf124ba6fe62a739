"""Independent reference implementations used as oracles by the tests."""

import numpy as np
from scipy import ndimage


def brute_hausdorff(a, b):
    """O(|A|*|B|) symmetric Hausdorff over foreground pixel centers."""
    pa = np.argwhere(np.asarray(a, dtype=bool))
    pb = np.argwhere(np.asarray(b, dtype=bool))
    assert len(pa) and len(pb)
    d2 = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=2)
    return float(np.sqrt(max(d2.min(axis=1).max(), d2.min(axis=0).max())))


def brute_js(p, q):
    """Jensen-Shannon divergence straight from the definition, natural log."""
    p = np.asarray(p, dtype=np.float64).ravel()
    q = np.asarray(q, dtype=np.float64).ravel()
    m = 0.5 * (p + q)
    total = 0.0
    for pi, mi in zip(p, m):
        if pi > 0:
            total += 0.5 * pi * np.log(pi / mi)
    for qi, mi in zip(q, m):
        if qi > 0:
            total += 0.5 * qi * np.log(qi / mi)
    return total


def brute_fill(points, height, width):
    """Even-odd point-in-polygon test run separately for every pixel center."""
    points = np.asarray(points, dtype=np.complex128)
    cols = (points.real + 1.0) * width / 2.0 - 0.5
    rows = (points.imag + 1.0) * height / 2.0 - 0.5
    grid = np.zeros((height, width), dtype=np.uint8)
    n = len(points)
    for r in range(height):
        for c in range(width):
            crossings = 0
            for i in range(n):
                y1, y2 = rows[i], rows[(i + 1) % n]
                x1, x2 = cols[i], cols[(i + 1) % n]
                if (y1 <= r < y2) or (y2 <= r < y1):
                    t = (r - y1) / (y2 - y1)
                    if x1 + t * (x2 - x1) <= c:
                        crossings += 1
            grid[r, c] = crossings % 2
    return grid


def numeric_grad(f, x, eps=1e-6):
    """Central finite differences of a scalar function at a flat float array."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    for i in range(x.size):
        xp = x.copy()
        xp.flat[i] += eps
        xm = x.copy()
        xm.flat[i] -= eps
        g.flat[i] = (f(xp) - f(xm)) / (2.0 * eps)
    return g


def _orient(a, b, c):
    v = (b - a).real * (c - a).imag - (b - a).imag * (c - a).real
    if abs(v) < 1e-14:
        return 0
    return 1 if v > 0 else -1


def proper_self_intersections(pts):
    """Pairs of non-adjacent polygon edges whose interiors cross."""
    n = len(pts)
    hits = 0
    for i in range(n):
        a, b = pts[i], pts[(i + 1) % n]
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue  # adjacent through the wrap
            c, d = pts[j], pts[(j + 1) % n]
            if _orient(a, b, c) * _orient(a, b, d) < 0 and _orient(c, d, a) * _orient(c, d, b) < 0:
                hits += 1
    return hits


def random_blob(rng, size=48, sigma=5.0, fill_holes=True):
    """Smooth random blob grid (uint8): thresholded filtered noise, largest piece."""
    noise = ndimage.gaussian_filter(rng.normal(size=(size, size)), sigma)
    grid = (noise > np.quantile(noise, 0.7)).astype(np.uint8)
    labels, n = ndimage.label(grid, structure=np.ones((3, 3)))
    if n == 0:
        grid = np.zeros((size, size), dtype=np.uint8)
        grid[size // 2, size // 2] = 1
        return grid
    counts = np.bincount(labels.ravel())
    counts[0] = 0
    grid = (labels == counts.argmax())
    if fill_holes:
        grid = ndimage.binary_fill_holes(grid)
    return grid.astype(np.uint8)
