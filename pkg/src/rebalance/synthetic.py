"""Seeded synthetic data: imbalanced Gaussian tables and flat/textured images."""

from __future__ import annotations

import numpy as np

from .seeding import stream
from .tabular import CONTINUOUS, Dataset
from .texture import GrayImage


def two_gaussians(n_rows: int = 1000, minority_fraction: float = 0.06, n_features: int = 5,
                  separation: float = 2.0, seed: int = 0) -> Dataset:
    """Two unit-covariance Gaussians; the minority mean sits ``separation`` away along every axis.

    The minority count is ``round(n_rows * minority_fraction)``; rows are
    shuffled so the classes interleave.
    """
    rng = stream(seed, "two_gaussians")
    n_min = int(np.floor(n_rows * minority_fraction + 0.5))
    if not 1 <= n_min < n_rows:
        raise ValueError("minority_fraction leaves a class empty")
    shift = separation / np.sqrt(n_features)
    x = rng.standard_normal((n_rows, n_features))
    y = np.zeros(n_rows, dtype=np.int64)
    y[:n_min] = 1
    x[:n_min] += shift
    order = rng.permutation(n_rows)
    return Dataset.from_arrays(x[order], y[order], [CONTINUOUS] * n_features)


def flat_image(height: int, width: int, seed: int, level: int = 140, noise: int = 6) -> GrayImage:
    """Smooth bright blob on a dark field with mild noise."""
    rng = stream(seed, "flat_image")
    pix = np.full((height, width), 5, dtype=np.int64)
    pix[2:-2, 2:-2] = level + rng.integers(-noise, noise + 1, (height - 4, width - 4))
    return GrayImage(np.clip(pix, 0, 255), 8)


def textured_image(height: int, width: int, seed: int, level: int = 140, amplitude: int = 90) -> GrayImage:
    """Same blob layout as :func:`flat_image` with strong pixel-scale texture."""
    rng = stream(seed, "textured_image")
    pix = np.full((height, width), 5, dtype=np.int64)
    stripes = (np.indices((height - 4, width - 4)).sum(0) % 2) * amplitude
    pix[2:-2, 2:-2] = level - amplitude // 2 + stripes + rng.integers(-20, 21, (height - 4, width - 4))
    return GrayImage(np.clip(pix, 20, 255), 8)
