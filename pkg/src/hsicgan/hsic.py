"""Biased kernel dependence estimator with Gaussian kernels.

Two routes to the same number: `hsic_biased` is the fast differentiable path
built on the autodiff engine (dot-product distance expansion, double-centering
arithmetic), while `hsic_oracle` is a deliberately naive transcription (per-pair
distance loops, explicitly materialised centering matrix, trace of the matrix
product). The test suite holds the two within 1e-10 of each other; keep them
independent.

Kernel convention: k(a, b) = exp(-||a - b||^2 / (2 sigma^2)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, as_tensor, exp, mul, scale, sum_all


@dataclass(frozen=True)
class HsicConfig:
    """Per-side kernel bandwidths; the second side falls back to the first."""

    sigma_x: float
    sigma_c: float | None = None

    def __post_init__(self):
        if self.sigma_x <= 0.0:
            raise ValueError(f"sigma_x must be positive, got {self.sigma_x}")
        if self.sigma_c is not None and self.sigma_c <= 0.0:
            raise ValueError(f"sigma_c must be positive, got {self.sigma_c}")

    @property
    def sigma_c_effective(self) -> float:
        return self.sigma_x if self.sigma_c is None else self.sigma_c


def _pairwise_sq_dists_np(x: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances via ||a||^2 + ||b||^2 - 2ab, exactly symmetric."""
    gram = x @ x.T
    gram = (gram + gram.T) * 0.5
    sq = np.diag(gram)
    d = sq[:, None] + sq[None, :] - 2.0 * gram
    np.maximum(d, 0.0, out=d)  # cancellation can leave tiny negatives
    np.fill_diagonal(d, 0.0)
    return d


def pairwise_sq_dists(x: Tensor | np.ndarray) -> Tensor:
    """Differentiable m x m matrix of squared row distances."""
    x = as_tensor(x)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError(f"pairwise distances need a non-empty (m,d) matrix, got {x.shape}")
    xd = x.data

    def vjp(g):
        # adjoint of the (symmetric, zero-diagonal) distance map
        s = g.sum(axis=1) + g.sum(axis=0)
        return (2.0 * (s[:, None] * xd - (g + g.T) @ xd),)

    return Tensor(_pairwise_sq_dists_np(xd), (x,), vjp)


def gaussian_gram(dists: Tensor, sigma: float) -> Tensor:
    """Entrywise exp(-d / (2 sigma^2)) of a squared-distance matrix."""
    if sigma <= 0.0:
        raise ValueError(f"bandwidth must be positive, got {sigma}")
    return exp(scale(dists, -1.0 / (2.0 * sigma * sigma)))


def _double_center_np(k: np.ndarray) -> np.ndarray:
    rm = k.mean(axis=1, keepdims=True)
    cm = k.mean(axis=0, keepdims=True)
    return k - rm - cm + k.mean()


def center_gram(gram: Tensor) -> Tensor:
    """Project out row and column means (the centering map is self-adjoint)."""
    gram = as_tensor(gram)
    if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
        raise ValueError(f"centering needs a square matrix, got {gram.shape}")

    def vjp(g):
        return (_double_center_np(g),)

    return Tensor(_double_center_np(gram.data), (gram,), vjp)


def hsic_biased(x: Tensor | np.ndarray, z: Tensor | np.ndarray, cfg: HsicConfig) -> Tensor:
    """Differentiable biased estimate of kernel dependence between row samples.

    The two inputs share only their leading dimension m; columns may differ.
    Returns a scalar tensor on the live graph, so gradients flow to both sides.
    """
    x, z = as_tensor(x), as_tensor(z)
    if x.ndim != 2 or z.ndim != 2 or x.shape[0] != z.shape[0]:
        raise ValueError(f"inputs must be (m,dx) and (m,dz), got {x.shape}, {z.shape}")
    m = x.shape[0]
    if m < 2:
        raise ValueError(f"need at least 2 samples, got {m}")
    kx = center_gram(gaussian_gram(pairwise_sq_dists(x), cfg.sigma_x))
    kz = center_gram(gaussian_gram(pairwise_sq_dists(z), cfg.sigma_c_effective))
    # both factors are centred symmetric, so trace of the product is the
    # elementwise-product sum
    return scale(sum_all(mul(kx, kz)), 1.0 / float((m - 1) ** 2))


def hsic_oracle(x: np.ndarray, z: np.ndarray, cfg: HsicConfig) -> float:
    """Brute-force transcription used only as a test oracle.

    Builds both kernel matrices entry by entry, materialises the centering
    matrix, and takes the trace of the quadruple product. Non-differentiable.
    """
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.ndim != 2 or z.ndim != 2 or x.shape[0] != z.shape[0]:
        raise ValueError(f"inputs must be (m,dx) and (m,dz), got {x.shape}, {z.shape}")
    m = x.shape[0]
    if m < 2:
        raise ValueError(f"need at least 2 samples, got {m}")

    def gram(rows: np.ndarray, sigma: float) -> np.ndarray:
        k = np.empty((m, m))
        for i in range(m):
            for j in range(m):
                diff = rows[i] - rows[j]
                k[i, j] = np.exp(-float(diff @ diff) / (2.0 * sigma * sigma))
        return k

    kx = gram(x, cfg.sigma_x)
    kz = gram(z, cfg.sigma_c_effective)
    h = np.eye(m) - np.full((m, m), 1.0 / m)
    return float(np.trace(kx @ h @ kz @ h)) / float((m - 1) ** 2)


def median_heuristic(x: np.ndarray) -> float:
    """Bandwidth from the median positive squared distance.

    sigma = sqrt(median / 2), so the median-distance pair lands at kernel
    value exp(-1/2). Duplicated rows contribute zero distances and are
    excluded.
    """
    x = np.asarray(x, dtype=np.float64)
    d = _pairwise_sq_dists_np(x)
    upper = d[np.triu_indices(d.shape[0], k=1)]
    positive = upper[upper > 0.0]
    if positive.size == 0:
        raise ValueError("median heuristic needs at least two distinct rows")
    return float(np.sqrt(np.median(positive) / 2.0))
