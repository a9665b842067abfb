"""Dataset ingestion: bit-exact IDX parsing plus deterministic synthetic data.

IDX files are the classic big-endian container: magic 0x00000803 for images
(count, rows, cols as u32 big-endian, then raw unsigned bytes) and 0x00000801
for labels. Files must be pre-decompressed; byte counts are enforced exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .latents import Rng

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    """Malformed IDX container (magic, length, or value domain)."""


@dataclass
class ImageDataset:
    """Flat float images in [-1, 1] plus optional integer labels.

    Labels are never consumed by training (the method is unsupervised); they
    are kept for evaluation only.
    """

    images: np.ndarray            # (n, image_dim) float64
    labels: np.ndarray | None     # (n,) int, or None
    image_height: int
    image_width: int

    def __post_init__(self):
        if self.images.ndim != 2 or self.images.shape[0] < 1:
            raise ValueError(f"images must be a non-empty (n,d) matrix, got {self.images.shape}")

    def __len__(self) -> int:
        return self.images.shape[0]

    @property
    def image_dim(self) -> int:
        return self.images.shape[1]


def parse_idx_images(buf: bytes) -> tuple[int, int, int, np.ndarray]:
    """Decode an IDX image file into (count, rows, cols, u8 pixel array)."""
    if len(buf) < 16:
        raise IdxFormatError(f"image header needs 16 bytes, got {len(buf)}")
    magic, n, rows, cols = struct.unpack(">IIII", buf[:16])
    if magic != IMAGE_MAGIC:
        raise IdxFormatError(f"bad image magic 0x{magic:08X}, expected 0x{IMAGE_MAGIC:08X}")
    expected = 16 + n * rows * cols
    if len(buf) != expected:
        raise IdxFormatError(f"image payload is {len(buf)} bytes, expected exactly {expected}")
    pixels = np.frombuffer(buf, dtype=np.uint8, offset=16).reshape(n, rows, cols).copy()
    return n, rows, cols, pixels


def parse_idx_labels(buf: bytes) -> np.ndarray:
    """Decode an IDX label file into an int vector with entries in 0..9."""
    if len(buf) < 8:
        raise IdxFormatError(f"label header needs 8 bytes, got {len(buf)}")
    magic, n = struct.unpack(">II", buf[:8])
    if magic != LABEL_MAGIC:
        raise IdxFormatError(f"bad label magic 0x{magic:08X}, expected 0x{LABEL_MAGIC:08X}")
    if len(buf) != 8 + n:
        raise IdxFormatError(f"label payload is {len(buf)} bytes, expected exactly {8 + n}")
    labels = np.frombuffer(buf, dtype=np.uint8, offset=8)
    if labels.size and labels.max() > 9:
        raise IdxFormatError(f"label byte {labels.max()} outside 0..9")
    return labels.astype(np.int64)


def write_idx_images(pixels: np.ndarray) -> bytes:
    """Encode a (n, rows, cols) u8 array as an IDX image file."""
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    if pixels.ndim != 3:
        raise ValueError(f"pixels must be (n, rows, cols), got {pixels.shape}")
    n, rows, cols = pixels.shape
    return struct.pack(">IIII", IMAGE_MAGIC, n, rows, cols) + pixels.tobytes()


def write_idx_labels(labels: np.ndarray) -> bytes:
    labels = np.asarray(labels)
    if labels.ndim != 1 or (labels.size and (labels.min() < 0 or labels.max() > 9)):
        raise ValueError("labels must be a vector with entries in 0..9")
    return struct.pack(">II", LABEL_MAGIC, labels.size) + labels.astype(np.uint8).tobytes()


def normalize(pixels: np.ndarray) -> np.ndarray:
    """Map u8 pixels to [-1, 1] (0 -> -1, 255 -> 1) and flatten each image."""
    flat = np.asarray(pixels, dtype=np.float64).reshape(pixels.shape[0], -1)
    return flat / 127.5 - 1.0


def load_mnist_files(images_path: str, labels_path: str) -> ImageDataset:
    with open(images_path, "rb") as fh:
        n, rows, cols, pixels = parse_idx_images(fh.read())
    with open(labels_path, "rb") as fh:
        labels = parse_idx_labels(fh.read())
    if labels.shape[0] != n:
        raise IdxFormatError(f"{n} images but {labels.shape[0]} labels")
    return ImageDataset(normalize(pixels), labels, rows, cols)


def synth_squares(n: int, rng: Rng) -> ImageDataset:
    """16x16 images: -1 background with a 4x4 patch of +1 at a random offset.

    The patch's top-left corner (x, y) is uniform over 0..12 in each axis;
    the ground-truth factor id is 13*y + x. Draw order per image: x, then y.
    """
    if n < 1:
        raise ValueError(f"need at least one image, got {n}")
    side, patch, span = 16, 4, 13
    xs = rng.index_draws(n, span)
    ys = rng.index_draws(n, span)
    images = np.full((n, side, side), -1.0)
    for i in range(n):
        images[i, ys[i]:ys[i] + patch, xs[i]:xs[i] + patch] = 1.0
    return ImageDataset(images.reshape(n, side * side), span * ys + xs, side, side)


def synth_gauss_mixture(n: int, k: int, rng: Rng) -> ImageDataset:
    """Two-dimensional mixture: k isotropic Gaussians (std 0.05) with means
    equally spaced on the radius-2 circle. Draw order: all component indices,
    then the 2n normal coordinates."""
    if k < 2:
        raise ValueError(f"need at least 2 components, got {k}")
    if n < 1:
        raise ValueError(f"need at least one sample, got {n}")
    comp = rng.index_draws(n, k)
    angles = 2.0 * np.pi * comp / k
    means = 2.0 * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    samples = means + 0.05 * rng.normal((n, 2))
    return ImageDataset(samples, comp, 1, 2)


DATASET_TAGS = ("mnist", "squares", "gauss2d")
SYNTH_DEFAULT_N = 2000


@dataclass(frozen=True)
class DataSpec:
    """Everything needed to (re)construct a training dataset in any process.

    `subset` keeps the first N images for mnist and sets the generated count
    for the synthetic datasets.
    """

    tag: str
    subset: int | None = None
    seed: int = 0
    mnist_images: str | None = None
    mnist_labels: str | None = None
    mixture_k: int = 8

    def __post_init__(self):
        if self.tag not in DATASET_TAGS:
            raise ValueError(f"unknown dataset {self.tag!r}")
        if self.subset is not None and self.subset < 1:
            raise ValueError(f"subset must be positive, got {self.subset}")


def load_dataset(spec: DataSpec) -> ImageDataset:
    if spec.tag == "mnist":
        if not spec.mnist_images or not spec.mnist_labels:
            raise ValueError("mnist needs both an image and a label file path")
        ds = load_mnist_files(spec.mnist_images, spec.mnist_labels)
        if spec.subset is not None:
            ds = ImageDataset(ds.images[:spec.subset],
                              None if ds.labels is None else ds.labels[:spec.subset],
                              ds.image_height, ds.image_width)
        return ds
    n = spec.subset if spec.subset is not None else SYNTH_DEFAULT_N
    if spec.tag == "squares":
        return synth_squares(n, Rng(spec.seed))
    return synth_gauss_mixture(n, spec.mixture_k, Rng(spec.seed))
