"""Deterministic image perturbations for robustness sweeps.

Four kinds, each driven by one strength parameter (motion blur adds an
angle).  All operate on float images in [0, 1] and return clipped float
images; stochastic kinds draw from a generator seeded per application, so a
(perturbation, seed) pair is fully reproducible.  Compact string specs:

    gauss:<std>   sp:<prob>   contrast:<factor>   mblur:<length>[:<angle>]
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .errors import InvalidParameterError

KINDS = ("gauss", "sp", "contrast", "mblur")

# identity parameter value and default sweep levels per kind
IDENTITY_LEVEL = {"gauss": 0.0, "sp": 0.0, "contrast": 1.0, "mblur": 1.0}
DEFAULT_SWEEPS = {
    "gauss": (0.0, 0.05, 0.1, 0.2, 0.3),
    "sp": (0.0, 0.02, 0.05, 0.1, 0.2),
    "contrast": (1.0, 0.8, 0.6, 0.4, 0.25),
    "mblur": (1.0, 3.0, 5.0, 9.0, 15.0),
}
DEFAULT_BLUR_ANGLE = 30.0


@dataclass(frozen=True)
class Perturbation:
    kind: str
    level: float           # std / prob / factor / kernel length
    angle: float = DEFAULT_BLUR_ANGLE  # motion blur only
    seed: int = 0          # stochastic kinds only

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown perturbation kind {self.kind!r}")
        if self.kind == "gauss" and self.level < 0:
            raise InvalidParameterError("gauss std must be >= 0")
        if self.kind == "sp" and not 0 <= self.level <= 1:
            raise InvalidParameterError("salt-and-pepper prob must be in [0, 1]")
        if self.kind == "contrast" and self.level <= 0:
            raise InvalidParameterError("contrast factor must be > 0")
        if self.kind == "mblur":
            if self.level < 1 or self.level != int(self.level):
                raise InvalidParameterError("blur length must be an integer >= 1")

    def with_seed(self, seed: int) -> "Perturbation":
        return replace(self, seed=seed)

    def spec(self) -> str:
        if self.kind == "mblur":
            return f"mblur:{int(self.level)}:{self.angle:g}"
        return f"{self.kind}:{self.level:g}"


def parse_perturbation(spec: str) -> Perturbation:
    parts = spec.strip().split(":")
    kind = parts[0]
    if kind not in KINDS:
        raise InvalidParameterError(f"unknown perturbation kind {kind!r}")
    if kind == "mblur":
        if len(parts) == 2:
            return Perturbation("mblur", float(parts[1]))
        if len(parts) == 3:
            return Perturbation("mblur", float(parts[1]), angle=float(parts[2]))
    elif len(parts) == 2:
        return Perturbation(kind, float(parts[1]))
    raise InvalidParameterError(f"malformed perturbation spec {spec!r}")


def parse_sweep(specs: str) -> list[Perturbation]:
    return [parse_perturbation(s) for s in specs.split(",") if s.strip()]


def default_sweep() -> list[Perturbation]:
    """4 kinds x 5 levels; the first level of each kind is the identity."""
    out = []
    for kind in KINDS:
        out.extend(Perturbation(kind, lv) for lv in DEFAULT_SWEEPS[kind])
    return out


def line_kernel(length: int, angle_deg: float) -> np.ndarray:
    """Normalized 1 x length line kernel rotated by angle.

    Each cell's weight is the exact length of the segment's intersection with
    that cell, so axis-aligned kernels are uniform rows/columns and every
    kernel is point-symmetric; length 1 degenerates to a single unit tap.
    """
    if length < 1:
        raise InvalidParameterError("length must be >= 1")
    if length == 1:
        return np.ones((1, 1))
    theta = np.deg2rad(angle_deg)
    dx, dy = np.cos(theta), -np.sin(theta)  # y axis points down rows
    half_span = length / 2.0 * max(abs(dx), abs(dy))
    half_cells = int(np.floor(half_span + 0.5 - 1e-12))
    size = 2 * half_cells + 1
    # breakpoints where the segment crosses a cell edge (half-integer lines)
    ts = [0.0, float(length)]
    for d in (dx, dy):
        if abs(d) < 1e-12:
            continue
        lo, hi = sorted(((-length / 2.0) * d, (length / 2.0) * d))
        edge = np.floor(lo - 0.5) + 0.5
        while edge <= hi:
            if lo <= edge <= hi:
                ts.append(edge / d + length / 2.0)
            edge += 1.0
    ts = np.unique(np.clip(ts, 0.0, length))
    kernel = np.zeros((size, size))
    for t0, t1 in zip(ts[:-1], ts[1:]):
        if t1 - t0 < 1e-12:
            continue
        tm = (t0 + t1) / 2.0 - length / 2.0
        r = half_cells + int(np.round(tm * dy))
        c = half_cells + int(np.round(tm * dx))
        kernel[r, c] += t1 - t0
    return kernel / kernel.sum()


def apply(image: np.ndarray, p: Perturbation) -> np.ndarray:
    """Apply one perturbation; output is float64 in [0, 1], same shape."""
    x = np.asarray(image, dtype=np.float64)
    if p.kind == "gauss":
        rng = np.random.default_rng(p.seed)
        out = x + rng.normal(0.0, p.level, size=x.shape) if p.level > 0 else x.copy()
    elif p.kind == "sp":
        rng = np.random.default_rng(p.seed)
        hit = rng.random(x.shape) < p.level
        value = (rng.random(x.shape) < 0.5).astype(np.float64)  # salt or pepper, equal odds
        out = np.where(hit, value, x)
    elif p.kind == "contrast":
        # written as x*f + 0.5*(1-f) so factor 1 is bitwise identity
        out = x * p.level + 0.5 * (1.0 - p.level)
    else:  # mblur
        kernel = line_kernel(int(p.level), p.angle)
        out = ndimage.convolve(x, kernel, mode="reflect")
    return np.clip(out, 0.0, 1.0)
