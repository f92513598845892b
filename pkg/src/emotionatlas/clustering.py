"""Seeded k-means over 3D projected points.

Determinism contract: the PRNG is NumPy's PCG64 stream seeded through
SeedSequence, each restart drawing from its own spawned child sequence, so
(points, k, seed, restarts) fixes labels and centers across runs and
platforms. Nearest-center ties always break toward the lowest cluster id.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CONVERGENCE_TOL = 1e-4
MAX_ITERATIONS = 300


class ClusteringError(ValueError):
    """Raised for non-finite input."""


@dataclass(frozen=True)
class ClusterModel:
    centers: np.ndarray
    labels: np.ndarray
    inertia: float
    seed: int
    restarts: int
    inertia_history: list[float] = field(default_factory=list)
    restart_inertias: list[float] = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    def to_dict(self) -> dict:
        return {
            "centers": self.centers.tolist(),
            "labels": self.labels.tolist(),
            "inertia": self.inertia,
            "seed": self.seed,
            "restarts": self.restarts,
        }


def _squared_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = (
        (points * points).sum(axis=1)[:, None]
        + (centers * centers).sum(axis=1)[None, :]
        - 2.0 * points @ centers.T
    )
    np.maximum(d2, 0.0, out=d2)
    return d2


def kmeans_plusplus_init(
    points: np.ndarray, k: int, rng: np.random.Generator
) -> np.ndarray:
    """Choose k starting centers by squared-distance-weighted sampling."""
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]), dtype=float)
    centers[0] = points[rng.integers(n)]
    if k == 1:
        return centers
    d2 = _squared_distances(points, centers[:1]).ravel()
    for i in range(1, k):
        total = d2.sum()
        if total > 0.0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)  # all remaining points coincide with a center
        centers[i] = points[idx]
        d2 = np.minimum(d2, _squared_distances(points, centers[i : i + 1]).ravel())
    return centers


def lloyd_iterations(
    points: np.ndarray,
    centers: np.ndarray,
    tol: float = CONVERGENCE_TOL,
    max_iter: int = MAX_ITERATIONS,
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Run Lloyd iterations from given centers.

    Returns final centers, labels, and the inertia recorded after each
    assignment step (non-increasing by construction). Clusters that come
    up empty are reseeded at the point farthest from its assigned center.
    """
    centers = centers.copy()
    k = centers.shape[0]
    n = points.shape[0]
    history: list[float] = []
    labels = np.zeros(n, dtype=int)

    for _ in range(max_iter):
        d2 = _squared_distances(points, centers)
        labels = np.argmin(d2, axis=1)

        counts = np.bincount(labels, minlength=k)
        if (counts == 0).any():
            own = d2[np.arange(n), labels].copy()
            for empty_id in np.flatnonzero(counts == 0):
                far = int(np.argmax(own))
                centers[empty_id] = points[far]
                own[far] = -np.inf  # one relocation per point per pass
            d2 = _squared_distances(points, centers)
            labels = np.argmin(d2, axis=1)

        history.append(float(d2[np.arange(n), labels].sum()))

        new_centers = centers.copy()
        for j in range(k):
            members = labels == j
            if members.any():
                new_centers[j] = points[members].mean(axis=0)
        shift = float(np.linalg.norm(new_centers - centers))
        centers = new_centers
        if shift < tol:
            break

    return centers, labels, history


def cluster(
    points: np.ndarray,
    n_regions: int,
    seed: int = 42,
    restarts: int = 10,
) -> ClusterModel:
    """Best-of-restarts k-means with k = min(n_regions, n_samples).

    The winning restart is the one with the lowest final inertia (ties go
    to the lowest restart index). Labels are recomputed against the final
    centers so every point carries its nearest center's id.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ClusteringError(f"expected a nonempty 2D matrix, got shape {pts.shape}")
    if not np.isfinite(pts).all():
        raise ClusteringError("non-finite values in points")
    if n_regions < 1:
        raise ClusteringError(f"n_regions must be >= 1, got {n_regions}")
    if restarts < 1:
        raise ClusteringError(f"restarts must be >= 1, got {restarts}")

    n = pts.shape[0]
    k = min(n_regions, n)

    best: tuple[np.ndarray, np.ndarray, list[float]] | None = None
    best_inertia = np.inf
    restart_inertias: list[float] = []
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        init = kmeans_plusplus_init(pts, k, rng)
        centers, labels, history = lloyd_iterations(pts, init)
        restart_inertias.append(history[-1])
        if history[-1] < best_inertia:
            best_inertia = history[-1]
            best = (centers, labels, history)

    assert best is not None
    centers, _, history = best
    d2 = _squared_distances(pts, centers)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(n), labels].sum())

    return ClusterModel(
        centers=centers,
        labels=labels,
        inertia=inertia,
        seed=seed,
        restarts=restarts,
        inertia_history=history,
        restart_inertias=restart_inertias,
    )
