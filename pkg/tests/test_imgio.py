"""Tests for PGM/PNG mask, image and heatmap writing."""

import numpy as np
import pytest

from fcsn.contour import BinaryMask
from fcsn.errors import InvalidParameterError
from fcsn.imgio import read_image, read_mask, write_heatmap, write_image, write_mask


@pytest.fixture
def mask():
    rng = np.random.default_rng(0)
    return BinaryMask((rng.random((20, 30)) < 0.4).astype(np.uint8))


@pytest.mark.parametrize("ext", ["pgm", "png"])
def test_mask_roundtrip_exact(mask, tmp_path, ext):
    path = tmp_path / f"m.{ext}"
    write_mask(mask, path)
    back = read_mask(path)
    assert np.array_equal(back.data, mask.data)


@pytest.mark.parametrize("ext", ["pgm", "png"])
def test_image_roundtrip_within_quantization(tmp_path, ext):
    rng = np.random.default_rng(1)
    image = rng.uniform(0.0, 1.0, size=(16, 24))
    path = tmp_path / f"i.{ext}"
    write_image(image, path)
    back = read_image(path)
    assert back.shape == image.shape
    assert np.abs(back - image).max() <= 0.5 / 255.0 + 1e-12


def test_image_write_clips(tmp_path):
    path = tmp_path / "c.pgm"
    write_image(np.array([[-0.5, 0.0], [1.0, 2.0]]), path)
    back = read_image(path)
    assert np.array_equal(back, [[0.0, 0.0], [1.0, 1.0]])


def test_pgm_bytes_layout(tmp_path):
    mask = BinaryMask(np.array([[1, 0], [0, 1]], dtype=np.uint8))
    path = tmp_path / "m.pgm"
    write_mask(mask, path)
    raw = path.read_bytes()
    assert raw == b"P5\n2 2\n255\n" + bytes([255, 0, 0, 255])


def test_mask_threshold_at_128(tmp_path):
    path = tmp_path / "t.pgm"
    path.write_bytes(b"P5\n4 1\n255\n" + bytes([0, 127, 128, 255]))
    back = read_mask(path)
    assert back.data.tolist() == [[0, 0, 1, 1]]


def test_write_heatmap_max_normalizes(tmp_path):
    values = np.array([[0.0, 0.1], [0.2, 0.4]])
    path = tmp_path / "h.pgm"
    write_heatmap(values, path)
    raw = path.read_bytes()
    assert raw.endswith(bytes([0, 64, 128, 255]))


def test_write_heatmap_zero_map(tmp_path):
    path = tmp_path / "z.pgm"
    write_heatmap(np.zeros((2, 2)), path)
    assert read_image(path).max() == 0.0


def test_unknown_extension_rejected(tmp_path, mask):
    with pytest.raises(InvalidParameterError):
        write_mask(mask, tmp_path / "m.tiff")
    with pytest.raises(InvalidParameterError):
        read_image(tmp_path / "m.bmp")


def test_malformed_pgm_rejected(tmp_path):
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P2\n2 2\n255\n1 2 3 4")  # ascii PGM, not P5
    with pytest.raises(InvalidParameterError):
        read_image(bad)
    wide = tmp_path / "wide.pgm"
    wide.write_bytes(b"P5\n2 2\n65535\n" + bytes(8))
    with pytest.raises(InvalidParameterError):
        read_image(wide)


def test_png_is_real_png(tmp_path, mask):
    path = tmp_path / "m.png"
    write_mask(mask, path)
    assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
