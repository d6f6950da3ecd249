"""Small dataset builders shared by the tests."""

import numpy as np

from muss.core import Dataset


def make_dataset(embeddings, qualities, labels=None) -> Dataset:
    return Dataset(np.asarray(embeddings, dtype=float), np.asarray(qualities, dtype=float), labels)


def random_dataset(n: int, dim: int = 3, seed: int = 0) -> Dataset:
    rng = np.random.default_rng(seed)
    return Dataset(rng.normal(size=(n, dim)), rng.uniform(0.0, 1.0, size=n))


def two_blobs(
    n_per_blob: int = 50, seed: int = 0, gap: float = 100.0
) -> tuple[Dataset, np.ndarray]:
    """Two tight 2-D blobs far apart; returns the dataset and the blob of every item."""
    rng = np.random.default_rng(seed)
    left = rng.normal(scale=0.5, size=(n_per_blob, 2))
    right = rng.normal(scale=0.5, size=(n_per_blob, 2)) + np.array([gap, 0.0])
    blobs = np.repeat([0, 1], n_per_blob)
    qualities = rng.uniform(0.0, 1.0, size=2 * n_per_blob)
    return Dataset(np.vstack([left, right]), qualities), blobs
