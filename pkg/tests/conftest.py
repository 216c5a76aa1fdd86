import os
import struct

import numpy as np
import pytest

from orthoreg.data.dataset import Dataset


def _set_env_defaults():
    os.environ.setdefault("ORTHOREG_SEED", "0")
    os.environ.setdefault("ORTHOREG_LOG_LEVEL", "WARNING")
    os.environ.setdefault("ORTHOREG_OUTPUT_DIR", "runs-test")
    os.environ.setdefault("ORTHOREG_WORKERS", "1")


_set_env_defaults()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def orthonormal_rows(rng):
    """Five orthonormal rows in R^8."""
    q, _ = np.linalg.qr(rng.standard_normal((8, 5)))
    return q.T


def make_blobs(n_per_class: int, seed: int, n_features: int = 6, n_classes: int = 3):
    rng = np.random.default_rng(seed)
    centers = np.random.default_rng(99).normal(0.0, 3.0, size=(n_classes, n_features))
    labels = np.repeat(np.arange(n_classes), n_per_class)
    images = centers[labels] + rng.standard_normal((labels.shape[0], n_features))
    order = rng.permutation(labels.shape[0])
    return Dataset(images=images[order], labels=labels[order])


@pytest.fixture
def blobs():
    return make_blobs(50, seed=0), make_blobs(20, seed=1)


def idx_images(pixels: np.ndarray) -> bytes:
    count, rows, cols = pixels.shape
    header = struct.pack(">4I", 0x00000803, count, rows, cols)
    return header + pixels.astype(np.uint8).tobytes()


def idx_labels(labels: np.ndarray) -> bytes:
    header = struct.pack(">2I", 0x00000801, labels.shape[0])
    return header + labels.astype(np.uint8).tobytes()


@pytest.fixture
def mnist_dir(tmp_path):
    """Tiny MNIST-shaped IDX files: 60 train and 20 test 6x6 images."""
    rng = np.random.default_rng(7)
    for prefix, count in (("train", 60), ("t10k", 20)):
        labels = rng.integers(0, 10, size=count)
        pixels = rng.integers(0, 256, size=(count, 6, 6))
        pixels[:, 0, 0] = labels * 25
        (tmp_path / f"{prefix}-images-idx3-ubyte").write_bytes(idx_images(pixels))
        (tmp_path / f"{prefix}-labels-idx1-ubyte").write_bytes(idx_labels(labels))
    return tmp_path
