"""Truncated complex Fourier descriptors of closed contours.

A contour sampled at N points alpha_0..alpha_{N-1} has coefficients

    z_n = (1/N) * sum_m alpha_m * exp(-2j*pi*n*m/N),   n = -k..k,

so z_0 is the point-mean of the curve and z_{+1}/z_{-1} carry the dominant
elliptic component.  Synthesis evaluates the finite series

    alpha_hat(t) = sum_n z_n * exp(2j*pi*n*t)

at arbitrary parameters t in [0, 1).  Recovering n = -k..k without aliasing
requires N >= 2k + 1 samples.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .contour import Contour
from .errors import EmptyDatasetError, InvalidParameterError, NyquistViolationError

RANGE_FLOOR = 1e-6  # lower bound for per-coefficient scaling constants


@dataclass(frozen=True)
class CoefficientVector:
    """Complex coefficients ordered n = -k..k (length 2k+1)."""

    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=np.complex128).copy()
        if arr.ndim != 1 or len(arr) % 2 == 0:
            raise InvalidParameterError(f"coefficients must be a 1D odd-length array, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("coefficients must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def k(self) -> int:
        return (len(self.coeffs) - 1) // 2

    @property
    def n_values(self) -> np.ndarray:
        return np.arange(-self.k, self.k + 1)

    def get(self, n: int) -> complex:
        if abs(n) > self.k:
            raise InvalidParameterError(f"harmonic {n} outside [-{self.k}, {self.k}]")
        return complex(self.coeffs[n + self.k])


@dataclass(frozen=True)
class CoefficientRanges:
    """Per-coefficient positive scaling constants s_n, ordered n = -k..k."""

    scales: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.scales, dtype=np.float64).copy()
        if arr.ndim != 1 or len(arr) % 2 == 0:
            raise InvalidParameterError(f"scales must be a 1D odd-length array, got shape {arr.shape}")
        if not (np.isfinite(arr).all() and (arr > 0).all()):
            raise ValueError("scales must be finite and positive")
        arr.setflags(write=False)
        object.__setattr__(self, "scales", arr)

    @property
    def k(self) -> int:
        return (len(self.scales) - 1) // 2

    def get(self, n: int) -> float:
        if abs(n) > self.k:
            raise InvalidParameterError(f"harmonic {n} outside [-{self.k}, {self.k}]")
        return float(self.scales[n + self.k])


def forward(contour: Contour, k: int) -> CoefficientVector:
    """Coefficients n = -k..k of a sampled closed contour."""
    pts = contour.points
    n = len(pts)
    if k < 0:
        raise InvalidParameterError(f"k must be >= 0, got {k}")
    if n < 2 * k + 1:
        raise NyquistViolationError(f"{n} samples support at most k = {(n - 1) // 2}, requested {k}")
    spectrum = np.fft.fft(pts) / n  # bin j holds n = j (j <= N/2) or j - N
    if k == 0:
        return CoefficientVector(spectrum[:1])
    return CoefficientVector(np.concatenate([spectrum[-k:], spectrum[: k + 1]]))


def evaluate(cv: CoefficientVector, t: np.ndarray) -> np.ndarray:
    """Evaluate the truncated series at parameters t (any real values)."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    n = cv.n_values
    return np.exp(2j * np.pi * np.outer(t, n)) @ cv.coeffs


def truncate(cv: CoefficientVector, k_new: int) -> CoefficientVector:
    if not 0 <= k_new <= cv.k:
        raise InvalidParameterError(f"k_new must be in [0, {cv.k}], got {k_new}")
    mid = cv.k
    return CoefficientVector(cv.coeffs[mid - k_new : mid + k_new + 1])


def estimate_ranges(dataset, margin: float = 1.1) -> CoefficientRanges:
    """Per-coefficient scaling s_n = margin * max_i max(|Re z_n|, |Im z_n|).

    The max runs over the whole dataset; values are floored at RANGE_FLOOR so
    coefficients that are identically zero still get a usable scale.
    """
    mats = _as_matrix(dataset)
    if margin <= 0:
        raise InvalidParameterError(f"margin must be positive, got {margin}")
    peak = np.maximum(np.abs(mats.real), np.abs(mats.imag)).max(axis=0)
    return CoefficientRanges(np.maximum(margin * peak, RANGE_FLOOR))


def _as_matrix(dataset) -> np.ndarray:
    """Stack CoefficientVectors (or a 2D complex array) into an (M, 2k+1) matrix."""
    if isinstance(dataset, np.ndarray) and dataset.ndim == 2:
        mats = np.asarray(dataset, dtype=np.complex128)
    else:
        rows = [cv.coeffs if isinstance(cv, CoefficientVector) else np.asarray(cv) for cv in dataset]
        if not rows:
            raise EmptyDatasetError("need at least one coefficient vector")
        mats = np.stack(rows).astype(np.complex128)
    if mats.shape[0] == 0:
        raise EmptyDatasetError("need at least one coefficient vector")
    return mats


def save_coefficients(cv: CoefficientVector, path: str | Path) -> None:
    """Write coefficients as JSON {"k": k, "coeffs": [[re, im], ...]} or CSV (n, re, im)."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        doc = {"k": cv.k, "coeffs": [[float(z.real), float(z.imag)] for z in cv.coeffs]}
        path.write_text(json.dumps(doc, indent=2) + "\n")
    elif path.suffix.lower() == ".csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "re", "im"])
            for n, z in zip(cv.n_values, cv.coeffs):
                writer.writerow([n, repr(float(z.real)), repr(float(z.imag))])
    else:
        raise InvalidParameterError(f"unsupported coefficient extension: {path.suffix!r}")


def load_coefficients(path: str | Path) -> CoefficientVector:
    path = Path(path)
    if path.suffix.lower() == ".json":
        doc = json.loads(path.read_text())
        pairs = np.asarray(doc["coeffs"], dtype=np.float64)
        if pairs.ndim != 2 or pairs.shape[1] != 2 or len(pairs) != 2 * int(doc["k"]) + 1:
            raise InvalidParameterError(f"{path}: malformed coefficient file")
        return CoefficientVector(pairs[:, 0] + 1j * pairs[:, 1])
    if path.suffix.lower() == ".csv":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise InvalidParameterError(f"{path}: empty coefficient file")
        rows.sort(key=lambda r: int(r["n"]))
        return CoefficientVector(np.array([float(r["re"]) + 1j * float(r["im"]) for r in rows]))
    raise InvalidParameterError(f"unsupported coefficient extension: {path.suffix!r}")
