"""Synthetic shapes with exactly known coefficients, and dataset files.

Generators return a Sample holding the exact contour (71 points by default),
its ground-truth coefficient vector, a high-resolution mask rasterized from
the exact curve, and a small training image: foreground 0.8 on background
0.2, anti-aliased by block-averaging the mask, optionally textured with
seeded Gaussian noise.

Dataset directories contain, per sample, an image PGM, a mask PGM and a
coefficients JSON, all listed in manifest.csv.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .contour import BinaryMask, Contour, resample_closed
from .errors import InvalidParameterError, RejectionLimitError
from .fourier import CoefficientVector, forward, load_coefficients, save_coefficients, truncate
from .imgio import read_image, read_mask, write_image, write_mask
from .raster import fill_polygon, rasterize

REJECTION_LIMIT = 100
FOREGROUND = 0.8
BACKGROUND = 0.2
CONTAINMENT_MARGIN = 0.02  # curves must stay this far inside D


@dataclass(frozen=True)
class EllipseSpec:
    a: float = 0.5
    b: float = 0.3
    center: complex = 0j
    rotation: float = 0.0  # radians

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise InvalidParameterError("ellipse semi-axes must be positive")


@dataclass(frozen=True)
class BandLimitedSpec:
    k: int = 10
    decay: float = 0.3  # magnitude cap 0.3/(1+n^2) scales with this
    seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.decay <= 0:
            raise InvalidParameterError("band-limited spec needs k >= 1, decay > 0")
        if self.seed < 0:
            raise InvalidParameterError("seed must be non-negative")


@dataclass(frozen=True)
class StarSpec:
    n_points: int = 5
    inner: float = 0.25
    outer: float = 0.6
    center: complex = 0j
    rotation: float = 0.0

    def __post_init__(self):
        if self.n_points < 3 or not 0 < self.inner < self.outer:
            raise InvalidParameterError("star needs n_points >= 3 and 0 < inner < outer")


@dataclass(frozen=True)
class Sample:
    contour: Contour
    coeffs: CoefficientVector
    mask: BinaryMask
    image: np.ndarray  # float64 (image_size, image_size) in [0, 1]

    def __post_init__(self):
        img = np.asarray(self.image, dtype=np.float64).copy()
        img.setflags(write=False)
        object.__setattr__(self, "image", img)


def ellipse_coefficients(spec: EllipseSpec, k: int) -> CoefficientVector:
    """Exact coefficients: z_0 = center, z_1 = (a+b)/2, z_{-1} = e^{2i rot}(a-b)/2.

    The parameter origin is chosen so z_1 is real positive (the standard
    start-point normalization); rotation then lives entirely in the phase of
    z_{-1}, which makes the descriptors a single-valued function of the shape.
    """
    coeffs = np.zeros(2 * k + 1, dtype=np.complex128)
    coeffs[k] = spec.center
    coeffs[k + 1] = (spec.a + spec.b) / 2.0
    coeffs[k - 1] = np.exp(2j * spec.rotation) * (spec.a - spec.b) / 2.0
    return CoefficientVector(coeffs)


def star_polygon(spec: StarSpec) -> np.ndarray:
    """2*n_points vertices alternating outer/inner radius, CCW, as complex points."""
    m = 2 * spec.n_points
    angles = spec.rotation + 2.0 * np.pi * np.arange(m) / m
    radii = np.where(np.arange(m) % 2 == 0, spec.outer, spec.inner)
    return spec.center + radii * np.exp(1j * angles)


def _draw_band_limited(rng: np.random.Generator, k: int, decay: float) -> np.ndarray:
    """Random coefficients with |c_n| <= decay/(1+n^2) and a dominant c_1.

    Harmonics beyond |n| = 1 get an extra geometric damping on top of the
    cap so most draws describe a regular (non-self-intersecting) curve; the
    cap itself is the documented contract.
    """
    n = np.arange(-k, k + 1)
    cap = decay / (1.0 + n.astype(float) ** 2)
    damp = 0.5 ** np.maximum(np.abs(n) - 1, 0)
    mags = cap * damp * rng.uniform(0.0, 1.0, size=2 * k + 1)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=2 * k + 1)
    coeffs = mags * np.exp(1j * phases)
    # dominant first harmonic sets the overall scale, bounded away from 0
    coeffs[k + 1] = rng.uniform(0.55, 1.0) * cap[k + 1] * np.exp(1j * rng.uniform(0, 2 * np.pi))
    coeffs[k - 1] = rng.uniform(0.0, 0.35) * cap[k - 1] * np.exp(1j * rng.uniform(0, 2 * np.pi))
    coeffs[k] = 0.1 * decay * (rng.uniform(-1, 1) + 1j * rng.uniform(-1, 1))
    return coeffs


def generate(
    spec,
    n_contour: int = 71,
    mask_size: int = 256,
    image_size: int = 32,
    texture_std: float = 0.0,
    texture_seed: int = 0,
) -> Sample:
    """Build the exact contour, coefficients, mask and training image for a spec."""
    if mask_size % image_size != 0:
        raise InvalidParameterError(f"mask size {mask_size} must be a multiple of image size {image_size}")
    k = (n_contour - 1) // 2  # densest alias-free harmonic set for this sampling
    if isinstance(spec, EllipseSpec):
        cv = ellipse_coefficients(spec, k)
        pts = _ellipse_points(spec, n_contour)
        _check_contained(pts)
        contour = Contour(pts)  # area = pi*a*b > 0, always CCW
        mask = fill_polygon(_ellipse_points(spec, 512), mask_size, mask_size)
    elif isinstance(spec, StarSpec):
        poly = star_polygon(spec)
        _check_contained(poly)
        if not _ccw(poly):
            poly = poly[::-1]
        contour = resample_closed(Contour(poly), n_contour)
        cv = forward(contour, k)
        mask = fill_polygon(poly, mask_size, mask_size)
    elif isinstance(spec, BandLimitedSpec):
        contour, cv, mask = _generate_band_limited(spec, n_contour, mask_size)
    else:
        raise InvalidParameterError(f"unknown shape spec {type(spec).__name__}")
    image = render_image(mask, image_size, texture_std, texture_seed)
    return Sample(contour, cv, mask, image)


def _ccw(pts: np.ndarray) -> bool:
    x, y = pts.real, pts.imag
    return float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)) > 0


def _check_contained(pts: np.ndarray) -> None:
    if np.abs(np.concatenate([pts.real, pts.imag])).max() > 1.0 - CONTAINMENT_MARGIN:
        raise InvalidParameterError("curve leaves the safe region of D = [-1, 1]^2")


def _ellipse_points(spec: EllipseSpec, n: int) -> np.ndarray:
    """Sample the ellipse with the same phase origin as ellipse_coefficients."""
    w = np.exp(2j * np.pi * np.arange(n) / n)
    return (
        spec.center
        + (spec.a + spec.b) / 2.0 * w
        + np.exp(2j * spec.rotation) * (spec.a - spec.b) / 2.0 / w
    )


def _generate_band_limited(spec: BandLimitedSpec, n_contour: int, mask_size: int):
    """Rejection-sample coefficients until the curve is contained and clean."""
    k_full = (n_contour - 1) // 2
    for attempt in range(REJECTION_LIMIT):
        rng = np.random.default_rng((spec.seed, attempt))
        coeffs = _draw_band_limited(rng, spec.k, spec.decay)
        cv_k = CoefficientVector(coeffs)
        # embed into the contour's full harmonic range
        full = np.zeros(2 * k_full + 1, dtype=np.complex128)
        full[k_full - spec.k : k_full + spec.k + 1] = coeffs
        cv = CoefficientVector(full)
        t = np.arange(n_contour) / n_contour
        n_vals = cv_k.n_values
        pts = np.exp(2j * np.pi * np.outer(t, n_vals)) @ coeffs
        try:
            _check_contained(pts)
        except InvalidParameterError:
            continue
        # keep the curve regular: the first harmonic must dominate
        residual = float(np.sum(np.abs(n_vals) * np.abs(coeffs))) - float(np.abs(coeffs[spec.k + 1]))
        if residual > 0.8 * np.abs(coeffs[spec.k + 1]):
            continue
        if not _ccw(pts):
            continue
        mask = rasterize(cv_k, mask_size, mask_size)
        if mask.is_empty or not _single_blob(mask.data):
            continue
        return Contour(pts), cv, mask
    raise RejectionLimitError(f"no admissible band-limited curve after {REJECTION_LIMIT} draws")


def _single_blob(grid: np.ndarray) -> bool:
    """One 8-connected component, no holes (4-connected background all border-linked)."""
    _, n_fg = ndimage.label(grid, structure=np.ones((3, 3)))
    if n_fg != 1:
        return False
    bg_labels, n_bg = ndimage.label(1 - grid)
    border = np.unique(
        np.concatenate([bg_labels[0, :], bg_labels[-1, :], bg_labels[:, 0], bg_labels[:, -1]])
    )
    return len(set(range(1, n_bg + 1)) - set(border.tolist())) == 0


def render_image(mask: BinaryMask, image_size: int, texture_std: float = 0.0, texture_seed: int = 0) -> np.ndarray:
    """Block-average the mask to image_size and map coverage onto [0.2, 0.8]."""
    h, w = mask.data.shape
    if h % image_size or w % image_size:
        raise InvalidParameterError(f"mask size {h}x{w} not divisible by image size {image_size}")
    fh, fw = h // image_size, w // image_size
    frac = mask.data.reshape(image_size, fh, image_size, fw).mean(axis=(1, 3))
    img = BACKGROUND + (FOREGROUND - BACKGROUND) * frac
    if texture_std > 0:
        rng = np.random.default_rng(texture_seed)
        img = img + rng.normal(0.0, texture_std, size=img.shape)
    return np.clip(img, 0.0, 1.0)


def random_ellipse(rng: np.random.Generator) -> EllipseSpec:
    """Ellipse comfortably inside D: axes 0.3..0.62, mild eccentricity, any rotation."""
    a = rng.uniform(0.32, 0.62)
    b = a * rng.uniform(0.55, 1.0)
    center = rng.uniform(-0.15, 0.15) + 1j * rng.uniform(-0.15, 0.15)
    rotation = rng.uniform(0.0, np.pi)
    return EllipseSpec(a=a, b=b, center=center, rotation=rotation)


def make_ellipse_dataset(
    count: int,
    seed: int = 0,
    k: int = 10,
    texture_std: float = 0.02,
    mask_size: int = 256,
    image_size: int = 32,
) -> list[Sample]:
    """Seeded list of random-ellipse samples with k-truncated ground truth."""
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(count):
        spec = random_ellipse(rng)
        s = generate(spec, mask_size=mask_size, image_size=image_size,
                     texture_std=texture_std, texture_seed=seed * 100003 + i)
        samples.append(_truncate_sample(s, k))
    return samples


def random_star(rng: np.random.Generator) -> StarSpec:
    outer = rng.uniform(0.45, 0.7)
    inner = outer * rng.uniform(0.35, 0.55)
    center = rng.uniform(-0.1, 0.1) + 1j * rng.uniform(-0.1, 0.1)
    return StarSpec(n_points=5, inner=inner, outer=outer, center=center,
                    rotation=rng.uniform(0.0, 2.0 * np.pi))


def make_star_dataset(
    count: int,
    seed: int = 0,
    k: int = 10,
    texture_std: float = 0.0,
    mask_size: int = 256,
    image_size: int = 32,
) -> list[Sample]:
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(count):
        s = generate(random_star(rng), mask_size=mask_size, image_size=image_size,
                     texture_std=texture_std, texture_seed=seed * 100003 + i)
        samples.append(_truncate_sample(s, k))
    return samples


def make_band_limited_dataset(
    count: int,
    seed: int = 0,
    k: int = 10,
    texture_std: float = 0.0,
    mask_size: int = 256,
    image_size: int = 32,
) -> list[Sample]:
    samples = []
    for i in range(count):
        s = generate(BandLimitedSpec(k=k, seed=seed * 1000003 + i), mask_size=mask_size,
                     image_size=image_size, texture_std=texture_std, texture_seed=seed * 100003 + i)
        samples.append(_truncate_sample(s, k))
    return samples


def _truncate_sample(s: Sample, k: int) -> Sample:
    return Sample(s.contour, truncate(s.coeffs, k), s.mask, s.image)


def write_dataset(samples: list[Sample], out_dir: str | Path, seed: int | None = None) -> Path:
    """Write image/mask/coefficients per sample plus manifest.csv; returns the dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "manifest.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "image", "mask", "coefficients", "seed"])
        for i, s in enumerate(samples):
            sid = f"{i:04d}"
            write_image(s.image, out / f"img_{sid}.pgm")
            write_mask(s.mask, out / f"mask_{sid}.pgm")
            save_coefficients(s.coeffs, out / f"coeffs_{sid}.json")
            writer.writerow([sid, f"img_{sid}.pgm", f"mask_{sid}.pgm", f"coeffs_{sid}.json",
                             "" if seed is None else seed])
    return out


@dataclass(frozen=True)
class DatasetEntry:
    sample_id: str
    image: np.ndarray
    coeffs: CoefficientVector
    mask: BinaryMask


def load_dataset(path: str | Path) -> list[DatasetEntry]:
    path = Path(path)
    manifest = path / "manifest.csv"
    if not manifest.exists():
        raise InvalidParameterError(f"{path} has no manifest.csv")
    entries = []
    with open(manifest, newline="") as fh:
        for row in csv.DictReader(fh):
            entries.append(
                DatasetEntry(
                    sample_id=row["sample_id"],
                    image=read_image(path / row["image"]),
                    coeffs=load_coefficients(path / row["coefficients"]),
                    mask=read_mask(path / row["mask"]),
                )
            )
    if not entries:
        raise InvalidParameterError(f"{path}: empty dataset")
    return entries
