"""Reading and writing masks, grayscale images, and heatmap renderings.

Formats: binary PGM (P5, maxval 255) written by hand so the bytes are fully
under our control, and grayscale PNG via Pillow.  Masks are written as 0/255
and read back with the threshold value >= 128 -> foreground.  Float images
use the full [0, 1] <-> [0, 255] range (rounded on write).
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from PIL import Image

from .contour import BinaryMask
from .errors import InvalidParameterError


def _write_gray8(arr: np.ndarray, path: str | Path) -> None:
    path = Path(path)
    arr = np.ascontiguousarray(arr, dtype=np.uint8)
    if path.suffix.lower() == ".pgm":
        header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode("ascii")
        path.write_bytes(header + arr.tobytes())
    elif path.suffix.lower() == ".png":
        Image.fromarray(arr, mode="L").save(path, format="PNG")
    else:
        raise InvalidParameterError(f"unsupported image extension: {path.suffix!r}")


def _read_gray8(path: str | Path) -> np.ndarray:
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        raw = path.read_bytes()
        m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", raw)
        if m is None:
            raise InvalidParameterError(f"{path}: not a binary (P5) PGM file")
        w, h, maxval = (int(g) for g in m.groups())
        if maxval > 255:
            raise InvalidParameterError(f"{path}: only 8-bit PGM supported")
        data = np.frombuffer(raw[m.end():], dtype=np.uint8, count=h * w)
        return data.reshape(h, w).copy()
    if path.suffix.lower() == ".png":
        return np.asarray(Image.open(path).convert("L"), dtype=np.uint8)
    raise InvalidParameterError(f"unsupported image extension: {path.suffix!r}")


def write_mask(mask: BinaryMask, path: str | Path) -> None:
    _write_gray8(mask.data * np.uint8(255), path)


def read_mask(path: str | Path) -> BinaryMask:
    return BinaryMask((_read_gray8(path) >= 128).astype(np.uint8))


def write_image(image: np.ndarray, path: str | Path) -> None:
    """Store a float image with values in [0, 1] as 8-bit grayscale."""
    image = np.asarray(image, dtype=np.float64)
    _write_gray8(np.rint(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8), path)


def read_image(path: str | Path) -> np.ndarray:
    return _read_gray8(path).astype(np.float64) / 255.0


def write_heatmap(values, path: str | Path) -> None:
    """Render a nonnegative 2D array (or Heatmap) as a max-normalized 8-bit image."""
    values = np.asarray(getattr(values, "values", values), dtype=np.float64)
    peak = values.max()
    scaled = values / peak if peak > 0 else np.zeros_like(values)
    _write_gray8(np.rint(scaled * 255.0).astype(np.uint8), path)
