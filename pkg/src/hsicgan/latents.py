"""Structured latent space: noise, one-hot categorical code, continuous code.

All randomness flows through `Rng`, a seeded PCG64 stream with a fixed,
documented draw order so that runs are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class Rng:
    """Deterministic random stream (PCG64 keyed by a 64-bit seed).

    Instances never share state; identical seeds give identical streams.
    Normal variates are produced by Box-Muller from this stream's uniforms
    rather than the library's ziggurat, so the draw count per request is
    fixed and documented: ceil(n/2) pairs of uniforms for n normals.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def random(self, shape) -> np.ndarray:
        """U[0,1) draws, row-major."""
        return self._gen.random(shape, dtype=np.float64)

    def uniform(self, lo: float, hi: float, shape) -> np.ndarray:
        return lo + (hi - lo) * self.random(shape)

    def normal(self, shape) -> np.ndarray:
        """Standard normals via Box-Muller: draws u1 block then u2 block."""
        n = int(np.prod(shape)) if shape else 1
        pairs = (n + 1) // 2
        u1 = 1.0 - self.random(pairs)  # (0,1]: keeps log finite
        u2 = self.random(pairs)
        r = np.sqrt(-2.0 * np.log(u1))
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(2.0 * np.pi * u2)
        out[1::2] = r * np.sin(2.0 * np.pi * u2)
        return out[:n].reshape(shape)

    def index_draws(self, count: int, bound: int) -> np.ndarray:
        """Uniform ints in [0, bound) via inverse CDF on one uniform each."""
        u = self.random(count)
        return np.minimum((u * bound).astype(np.int64), bound - 1)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)


@dataclass(frozen=True)
class LatentSpec:
    """Dimensions and priors of the latent input (noise + structured code)."""

    z_dim: int = 62
    cat_classes: int = 10
    cont_dim: int = 2
    z_prior: str = "uniform"       # uniform -> U(-1,1); normal -> Box-Muller N(0,1)
    cont_prior: str = "uniform01"  # U(0,1)

    def __post_init__(self):
        if min(self.z_dim, self.cat_classes, self.cont_dim) < 1:
            raise ValueError("all latent dimensions must be positive")
        if self.z_prior not in ("uniform", "normal"):
            raise ValueError(f"unknown z prior {self.z_prior!r}")
        if self.cont_prior != "uniform01":
            raise ValueError(f"unknown continuous prior {self.cont_prior!r}")

    @property
    def code_dim(self) -> int:
        return self.cat_classes + self.cont_dim

    @property
    def input_dim(self) -> int:
        return self.z_dim + self.code_dim


@dataclass
class LatentBatch:
    """One sampled batch: noise, one-hot categorical block, continuous block."""

    z: np.ndarray        # (m, z_dim)
    c_cat: np.ndarray    # (m, cat_classes), one-hot rows
    c_cont: np.ndarray   # (m, cont_dim)
    cat_labels: np.ndarray  # (m,), argmax of each one-hot row

    def __len__(self) -> int:
        return self.z.shape[0]

    def row(self, i: int) -> "LatentBatch":
        return LatentBatch(self.z[i:i + 1].copy(), self.c_cat[i:i + 1].copy(),
                           self.c_cont[i:i + 1].copy(), self.cat_labels[i:i + 1].copy())


def one_hot(labels: np.ndarray, classes: int) -> np.ndarray:
    out = np.zeros((labels.shape[0], classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def sample_latents(spec: LatentSpec, m: int, rng: Rng) -> LatentBatch:
    """Draws, in this fixed order: z (row-major), categorical labels, c_cont."""
    if m < 1:
        raise ValueError(f"batch size must be positive, got {m}")
    if spec.z_prior == "uniform":
        z = rng.uniform(-1.0, 1.0, (m, spec.z_dim))
    else:
        z = rng.normal((m, spec.z_dim))
    labels = rng.index_draws(m, spec.cat_classes)
    c_cont = rng.random((m, spec.cont_dim))
    return LatentBatch(z, one_hot(labels, spec.cat_classes), c_cont, labels)


def traversal_batch(spec: LatentSpec, fixed: LatentBatch, *,
                    cont_index: int | None = None, steps: int = 10,
                    lo: float = -1.0, hi: float = 1.0) -> LatentBatch:
    """Copies of a fixed latent row with one code coordinate swept.

    With `cont_index` set, the chosen continuous coordinate runs over the
    inclusive linear grid [lo, hi] in `steps` steps. Without it, the
    categorical code runs over all classes instead, one row per class.
    """
    if len(fixed) != 1:
        raise ValueError("traversal needs a single fixed latent row")
    if cont_index is None:
        k = spec.cat_classes
        labels = np.arange(k)
        return LatentBatch(np.repeat(fixed.z, k, axis=0), one_hot(labels, k),
                           np.repeat(fixed.c_cont, k, axis=0), labels)
    if not 0 <= cont_index < spec.cont_dim:
        raise IndexError(f"continuous code index {cont_index} out of range 0..{spec.cont_dim - 1}")
    if steps < 2:
        raise ValueError(f"traversal needs at least 2 steps, got {steps}")
    c_cont = np.repeat(fixed.c_cont, steps, axis=0)
    c_cont[:, cont_index] = np.linspace(lo, hi, steps)
    return LatentBatch(np.repeat(fixed.z, steps, axis=0),
                       np.repeat(fixed.c_cat, steps, axis=0),
                       c_cont, np.repeat(fixed.cat_labels, steps))


def concat_code(batch: LatentBatch) -> np.ndarray:
    """The full code matrix: one-hot block then continuous block."""
    return np.concatenate([batch.c_cat, batch.c_cont], axis=1)
