"""Generator evaluation: traversal grids, held-out dependence, distinctness.

The traversal grid follows the usual inspection protocol: one row per
categorical class with noise and the untouched continuous coordinate fixed
per row, one column per traversal step of the chosen continuous coordinate
over [-1, 1]. Pixels map (-1, 1) to 0..255 by round-half-up, so grids are
bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hsic import HsicConfig, hsic_biased
from .latents import LatentSpec, Rng, concat_code, one_hot, sample_latents, traversal_batch
from .networks import Generator


@dataclass
class ImageGrid:
    rows: int
    cols: int
    cell_height: int
    cell_width: int
    pixels: np.ndarray  # (rows*cell_height, cols*cell_width) uint8

    def __post_init__(self):
        expected = (self.rows * self.cell_height, self.cols * self.cell_width)
        if self.pixels.shape != expected or self.pixels.dtype != np.uint8:
            raise ValueError(f"pixel block must be uint8 {expected}, got "
                             f"{self.pixels.dtype} {self.pixels.shape}")


def quantize_images(values: np.ndarray) -> np.ndarray:
    """(-1, 1) floats to 0..255 bytes, round-half-up (so 0.0 -> 128)."""
    scaled = np.floor((values + 1.0) * 127.5 + 0.5)
    return np.clip(scaled, 0.0, 255.0).astype(np.uint8)


def traversal_grid(g: Generator, spec: LatentSpec, cont_index: int, steps: int,
                   rng: Rng, image_height: int, image_width: int,
                   lo: float = -1.0, hi: float = 1.0) -> ImageGrid:
    """One row per categorical class, one column per traversal value.

    Per row, in order: one latent draw fixes the noise and the untouched
    continuous coordinates; the row's class replaces the drawn one.
    """
    if image_height * image_width != g.image_dim:
        raise ValueError(f"{image_height}x{image_width} cells do not tile width {g.image_dim}")
    k = spec.cat_classes
    blocks = []
    for row_class in range(k):
        fixed = sample_latents(spec, 1, rng)
        fixed.c_cat = one_hot(np.array([row_class]), k)
        fixed.cat_labels = np.array([row_class])
        batch = traversal_batch(spec, fixed, cont_index=cont_index, steps=steps,
                                lo=lo, hi=hi)
        images = quantize_images(g.forward(batch).data)
        blocks.append(np.hstack([img.reshape(image_height, image_width) for img in images]))
    return ImageGrid(k, steps, image_height, image_width, np.vstack(blocks))


def write_pgm(grid: ImageGrid, path: str) -> None:
    """Binary PGM (P5), max value 255, raw row-major bytes."""
    h, w = grid.pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(grid.pixels.tobytes())


def read_pgm(path: str) -> np.ndarray:
    """Read back the exact dialect write_pgm emits."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if not buf.startswith(b"P5\n"):
        raise ValueError("not a binary PGM (P5) file")
    rest = buf[3:]
    header, _, _ = rest.partition(b"\n")
    maxline, _, data = rest[len(header) + 1:].partition(b"\n")
    try:
        w, h = (int(tok) for tok in header.split())
    except ValueError as exc:
        raise ValueError(f"bad PGM dimension line {header!r}") from exc
    if maxline != b"255":
        raise ValueError(f"unsupported PGM max value {maxline!r}")
    if len(data) != w * h:
        raise ValueError(f"PGM payload is {len(data)} bytes, expected {w * h}")
    return np.frombuffer(data, dtype=np.uint8).reshape(h, w).copy()


def eval_hsic(g: Generator, spec: LatentSpec, n: int, cfg: HsicConfig, rng: Rng) -> float:
    """Dependence between freshly generated images and their codes."""
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    batch = sample_latents(spec, n, rng)
    images = g.forward(batch).data
    return hsic_biased(images, concat_code(batch), cfg).item()


def categorical_distinctness(g: Generator, spec: LatentSpec, n_per_class: int,
                             rng: Rng) -> float:
    """Fraction of generated samples nearest their own class centroid.

    Generates `n_per_class` samples per categorical class (noise and
    continuous code resampled per class, classes drawn in order), computes
    per-class mean images, and classifies every sample by nearest centroid.
    Exact distance ties resolve to the lowest class index, so a constant
    generator scores exactly 1/K.
    """
    if n_per_class < 2:
        raise ValueError(f"need at least 2 samples per class, got {n_per_class}")
    k = spec.cat_classes
    all_images = []
    centroids = []
    for cls in range(k):
        batch = sample_latents(spec, n_per_class, rng)
        batch.c_cat = one_hot(np.full(n_per_class, cls), k)
        batch.cat_labels = np.full(n_per_class, cls)
        images = g.forward(batch).data
        all_images.append(images)
        centroids.append(images.mean(axis=0))
    samples = np.vstack(all_images)                      # (k*n, d)
    centres = np.vstack(centroids)                       # (k, d)
    d2 = (np.square(samples).sum(axis=1)[:, None]
          + np.square(centres).sum(axis=1)[None, :]
          - 2.0 * samples @ centres.T)
    nearest = np.argmin(d2, axis=1)                      # argmin takes the lowest index on ties
    own = np.repeat(np.arange(k), n_per_class)
    return float(np.mean(nearest == own))
