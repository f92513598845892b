"""Feature standardization and projection onto three principal components.

Conventions, fixed for reproducibility: population (divide-by-n) variance
throughout, zero-variance features pass through unscaled, components come
from an SVD of the standardized matrix, and each component's sign is
chosen so its largest-magnitude loading is positive. When fewer than three
components exist the projected coordinates and explained variances are
padded with zeros up to three.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TARGET_DIMS = 3


class ReductionError(ValueError):
    """Raised for empty or non-finite input."""


@dataclass(frozen=True)
class Standardizer:
    """Per-feature centering and scaling learned from a fit."""

    means: np.ndarray
    scales: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.means) / self.scales


@dataclass(frozen=True)
class Projection3D:
    """A fitted 3D projection.

    ``components`` holds only the real components (up to 3 rows); ``points``
    and ``explained_variance`` are always padded out to 3 columns/entries so
    downstream spatial mapping sees exactly three coordinates.
    """

    components: np.ndarray
    explained_variance: np.ndarray
    points: np.ndarray
    standardizer: Standardizer

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Project new rows into the fitted 3D space (zero-padded)."""
        Z = self.standardizer.transform(X)
        proj = Z @ self.components.T
        return _pad_columns(proj, TARGET_DIMS)

    def to_dict(self) -> dict:
        return {
            "means": self.standardizer.means.tolist(),
            "scales": self.standardizer.scales.tolist(),
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
        }


def _pad_columns(arr: np.ndarray, width: int) -> np.ndarray:
    if arr.shape[1] >= width:
        return arr[:, :width]
    out = np.zeros((arr.shape[0], width), dtype=arr.dtype)
    out[:, : arr.shape[1]] = arr
    return out


def fit_standardizer(X: np.ndarray) -> Standardizer:
    means = X.mean(axis=0)
    var = X.var(axis=0)  # population variance
    scales = np.sqrt(var)
    scales[scales == 0.0] = 1.0
    return Standardizer(means=means, scales=scales)


def fit_transform(embeddings: np.ndarray) -> Projection3D:
    """Standardize rows and project onto the top principal components.

    The number of real components is min(3, n_samples, n_features);
    explained variances are the squared singular values divided by n and
    match the eigenvalues of the population covariance of the standardized
    data.
    """
    X = np.asarray(embeddings, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ReductionError(f"expected a nonempty 2D matrix, got shape {X.shape}")
    bad = ~np.isfinite(X).all(axis=1)
    if bad.any():
        raise ReductionError(f"non-finite values in row {int(np.flatnonzero(bad)[0])}")

    n, p = X.shape
    standardizer = fit_standardizer(X)
    Z = standardizer.transform(X)

    k = min(TARGET_DIMS, n, p)
    _, singular, vt = np.linalg.svd(Z, full_matrices=False)
    components = vt[:k].copy()

    # Sign convention: largest-|loading| coordinate of each component positive.
    for row in components:
        if row[int(np.argmax(np.abs(row)))] < 0:
            row *= -1.0

    points = _pad_columns(Z @ components.T, TARGET_DIMS)
    explained = np.zeros(TARGET_DIMS)
    explained[:k] = (singular[:k] ** 2) / n

    return Projection3D(
        components=components,
        explained_variance=explained,
        points=points,
        standardizer=standardizer,
    )
