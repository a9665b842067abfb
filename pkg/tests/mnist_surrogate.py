"""28x28 handwritten-digit IDX files for the desk-scale acceptance run.

Real MNIST IDX files are used when the MNIST_DIR environment variable points
at a directory containing train-images-idx3-ubyte and train-labels-idx1-ubyte
(decompressed). Without them, this module builds a stand-in from scikit-learn's
bundled handwritten digits (1797 real 8x8 samples, 10 classes): each image is
nearest-neighbour upscaled to 24x24, zero-padded to 28x28, and replicated with
small seeded translations until the requested count is reached. The result is
written through the package's own IDX writer, so the acceptance run exercises
the exact ingestion path either way.
"""

import os

import numpy as np

from hsicgan.dataio import write_idx_images, write_idx_labels

MNIST_IMAGE_FILE = "train-images-idx3-ubyte"
MNIST_LABEL_FILE = "train-labels-idx1-ubyte"


def real_mnist_paths() -> tuple[str, str] | None:
    root = os.environ.get("MNIST_DIR")
    if not root:
        return None
    images = os.path.join(root, MNIST_IMAGE_FILE)
    labels = os.path.join(root, MNIST_LABEL_FILE)
    if os.path.exists(images) and os.path.exists(labels):
        return images, labels
    return None


def build_surrogate(n: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    from sklearn.datasets import load_digits

    raw = load_digits()
    base = np.round(raw.images / 16.0 * 255.0).astype(np.uint8)  # (1797, 8, 8)
    labels = raw.target.astype(np.int64)

    upscaled = np.kron(base, np.ones((1, 3, 3), dtype=np.uint8))  # 24x24
    padded = np.zeros((base.shape[0], 28, 28), dtype=np.uint8)
    padded[:, 2:26, 2:26] = upscaled

    rng = np.random.default_rng(seed)
    order = rng.permutation(base.shape[0])
    images = np.empty((n, 28, 28), dtype=np.uint8)
    out_labels = np.empty(n, dtype=np.int64)
    for i in range(n):
        src = order[i % base.shape[0]]
        dy, dx = rng.integers(-2, 3, size=2)
        images[i] = np.roll(padded[src], (dy, dx), axis=(0, 1))
        out_labels[i] = labels[src]
    return images, out_labels


def surrogate_idx_files(directory: str, n: int = 12000, seed: int = 0) -> tuple[str, str]:
    """Write the stand-in dataset as IDX files; returns (images, labels) paths."""
    images, labels = build_surrogate(n, seed)
    images_path = os.path.join(directory, MNIST_IMAGE_FILE)
    labels_path = os.path.join(directory, MNIST_LABEL_FILE)
    with open(images_path, "wb") as fh:
        fh.write(write_idx_images(images))
    with open(labels_path, "wb") as fh:
        fh.write(write_idx_labels(labels))
    return images_path, labels_path


def mnist_idx_files(directory: str, n: int = 12000, seed: int = 0) -> tuple[str, str, bool]:
    """Real MNIST paths when available, else freshly written surrogate files.

    Returns (images_path, labels_path, used_real_mnist).
    """
    real = real_mnist_paths()
    if real is not None:
        return real[0], real[1], True
    images, labels = surrogate_idx_files(directory, n, seed)
    return images, labels, False
