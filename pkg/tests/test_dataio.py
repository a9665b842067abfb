"""IDX container parsing, normalisation, synthetic datasets."""

import struct

import numpy as np
import pytest

from hsicgan.dataio import (DataSpec, IdxFormatError, ImageDataset, load_dataset,
                            normalize, parse_idx_images, parse_idx_labels,
                            synth_gauss_mixture, synth_squares,
                            write_idx_images, write_idx_labels)
from hsicgan.latents import Rng


def test_parse_image_header():
    buf = struct.pack(">IIII", 0x803, 2, 28, 28) + bytes(2 * 28 * 28)
    n, rows, cols, pixels = parse_idx_images(buf)
    assert (n, rows, cols) == (2, 28, 28)
    assert pixels.shape == (2, 28, 28)


def test_image_parser_rejects_label_magic():
    buf = struct.pack(">IIII", 0x801, 1, 2, 2) + bytes(4)
    with pytest.raises(IdxFormatError, match="magic"):
        parse_idx_images(buf)


def test_image_parser_rejects_truncation_and_trailing_bytes():
    good = struct.pack(">IIII", 0x803, 1, 2, 2) + bytes(4)
    with pytest.raises(IdxFormatError):
        parse_idx_images(good[:-1])
    with pytest.raises(IdxFormatError):
        parse_idx_images(good + b"\x00")
    with pytest.raises(IdxFormatError):
        parse_idx_images(b"\x00\x00\x08")


def test_image_round_trip_is_bit_exact():
    pixels = np.array([[[0, 255], [128, 7]]], dtype=np.uint8)
    n, rows, cols, parsed = parse_idx_images(write_idx_images(pixels))
    assert (n, rows, cols) == (1, 2, 2)
    np.testing.assert_array_equal(parsed, pixels)


def test_parse_labels():
    buf = struct.pack(">II", 0x801, 3) + bytes([5, 0, 4])
    np.testing.assert_array_equal(parse_idx_labels(buf), [5, 0, 4])


def test_label_parser_accepts_empty_and_round_trips():
    assert parse_idx_labels(struct.pack(">II", 0x801, 0)).size == 0
    labels = np.array([0, 9, 3, 7])
    np.testing.assert_array_equal(parse_idx_labels(write_idx_labels(labels)), labels)


def test_label_parser_rejects_bad_magic_and_domain():
    with pytest.raises(IdxFormatError, match="magic"):
        parse_idx_labels(struct.pack(">II", 0x803, 1) + bytes([1]))
    with pytest.raises(IdxFormatError):
        parse_idx_labels(struct.pack(">II", 0x801, 1) + bytes([10]))
    with pytest.raises(IdxFormatError):
        parse_idx_labels(struct.pack(">II", 0x801, 5) + bytes([1]))


def test_normalize_endpoints_and_midpoint():
    pixels = np.array([[[0, 255, 128]]], dtype=np.uint8)
    out = normalize(pixels)
    assert out.shape == (1, 3)
    assert out[0, 0] == -1.0
    assert out[0, 1] == 1.0
    assert out[0, 2] == pytest.approx(0.0039215686274509665, rel=1e-15)
    assert out.min() >= -1.0 and out.max() <= 1.0


# ---------------------------------------------------------------------------
# synthetic datasets

def test_squares_patch_geometry():
    ds = synth_squares(200, Rng(0))
    assert ds.images.shape == (200, 256)
    assert ds.image_height == ds.image_width == 16
    per_image = (ds.images == 1.0).sum(axis=1)
    np.testing.assert_array_equal(per_image, np.full(200, 16))
    assert set(np.unique(ds.images)) == {-1.0, 1.0}


def test_squares_label_encodes_position():
    ds = synth_squares(500, Rng(1))
    for img, label in zip(ds.images[:20], ds.labels[:20]):
        grid = img.reshape(16, 16)
        ys, xs = np.nonzero(grid == 1.0)
        x0, y0 = xs.min(), ys.min()
        assert label == 13 * y0 + x0
        assert xs.max() - x0 == 3 and ys.max() - y0 == 3


def test_squares_corner_case_patch():
    ds = synth_squares(300, Rng(2))
    corner = np.nonzero(ds.labels == 0)[0]
    assert corner.size > 0
    grid = ds.images[corner[0]].reshape(16, 16)
    assert np.all(grid[:4, :4] == 1.0)
    assert (grid == 1.0).sum() == 16


def test_squares_bit_reproducible():
    a = synth_squares(50, Rng(3))
    b = synth_squares(50, Rng(3))
    np.testing.assert_array_equal(a.images, b.images)
    np.testing.assert_array_equal(a.labels, b.labels)


def test_gauss_mixture_means_on_circle():
    ds = synth_gauss_mixture(4000, 4, Rng(4))
    assert ds.images.shape == (4000, 2)
    expected = {0: (2, 0), 1: (0, 2), 2: (-2, 0), 3: (0, -2)}
    for comp, mean in expected.items():
        rows = ds.images[ds.labels == comp]
        np.testing.assert_allclose(rows.mean(axis=0), mean, atol=0.02)


def test_gauss_mixture_component_frequencies():
    ds = synth_gauss_mixture(4000, 4, Rng(5))
    counts = np.bincount(ds.labels, minlength=4)
    assert np.all(np.abs(counts - 1000) <= 100)


def test_gauss_mixture_stays_near_origin():
    ds = synth_gauss_mixture(4000, 8, Rng(6))
    radii = np.linalg.norm(ds.images, axis=1)
    assert radii.max() <= 2.5


def test_dataset_validation():
    with pytest.raises(ValueError):
        ImageDataset(np.zeros((0, 4)), None, 2, 2)
    with pytest.raises(ValueError):
        synth_gauss_mixture(10, 1, Rng(0))
    with pytest.raises(ValueError):
        synth_squares(0, Rng(0))


# ---------------------------------------------------------------------------
# dataset dispatch

def test_load_dataset_subset_controls_synthetic_count():
    ds = load_dataset(DataSpec(tag="squares", subset=123, seed=9))
    assert len(ds) == 123
    default = load_dataset(DataSpec(tag="squares", seed=9))
    assert len(default) == 2000


def test_load_dataset_gauss2d_and_purity():
    a = load_dataset(DataSpec(tag="gauss2d", subset=50, seed=4))
    b = load_dataset(DataSpec(tag="gauss2d", subset=50, seed=4))
    assert a.image_dim == 2
    np.testing.assert_array_equal(a.images, b.images)
    with pytest.raises(ValueError):
        DataSpec(tag="fashion")
    with pytest.raises(ValueError):
        DataSpec(tag="squares", subset=0)


def test_load_dataset_mnist_requires_paths():
    with pytest.raises(ValueError):
        load_dataset(DataSpec(tag="mnist"))


def test_load_dataset_mnist_from_files(tmp_path):
    rng = np.random.default_rng(0)
    pixels = rng.integers(0, 256, size=(7, 4, 4)).astype(np.uint8)
    labels = rng.integers(0, 10, size=7)
    img_path = tmp_path / "imgs.idx"
    lbl_path = tmp_path / "lbls.idx"
    img_path.write_bytes(write_idx_images(pixels))
    lbl_path.write_bytes(write_idx_labels(labels))
    ds = load_dataset(DataSpec(tag="mnist", subset=5, mnist_images=str(img_path),
                               mnist_labels=str(lbl_path)))
    assert len(ds) == 5
    assert ds.image_dim == 16
    np.testing.assert_array_equal(ds.labels, labels[:5])
    np.testing.assert_allclose(ds.images, normalize(pixels)[:5], rtol=1e-15)
