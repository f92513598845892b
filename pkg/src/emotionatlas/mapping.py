"""Greedy assignment of cluster centers to unique brain regions.

Clusters are processed in ascending id; each takes its nearest region not
already claimed, with distance ties broken toward the lower region index.
The result depends on processing order and is not a minimum-total-distance
matching; that is the intended behavior.

Cluster coordinates live in PCA space while region coordinates are MNI
millimeters. Distances between the two are compared directly, which is a
semantic caveat of the method itself; ``rescale=True`` optionally min-max
rescales centers into the atlas bounding box first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .atlas import Atlas
from .clustering import ClusterModel
from .corpus import TextChunk


class MappingError(ValueError):
    """Raised when clusters cannot be injectively assigned."""


@dataclass(frozen=True)
class RegionAssignment:
    """Injective map cluster id -> region index, with the distances used."""

    cluster_to_region: dict[int, int]
    distances: dict[int, float]
    region_names: dict[int, str]

    def region_of(self, cluster_id: int) -> str:
        return self.region_names[self.cluster_to_region[cluster_id]]

    def to_rows(self) -> list[tuple[int, str, float]]:
        return [
            (cid, self.region_names[ridx], self.distances[cid])
            for cid, ridx in sorted(self.cluster_to_region.items())
        ]


def _rescale_to_box(centers: np.ndarray, coords: np.ndarray) -> np.ndarray:
    lo, hi = coords.min(axis=0), coords.max(axis=0)
    c_lo, c_hi = centers.min(axis=0), centers.max(axis=0)
    span = c_hi - c_lo
    out = np.empty_like(centers, dtype=float)
    for axis in range(centers.shape[1]):
        if span[axis] > 0:
            out[:, axis] = lo[axis] + (centers[:, axis] - c_lo[axis]) / span[axis] * (hi[axis] - lo[axis])
        else:
            out[:, axis] = (lo[axis] + hi[axis]) / 2.0  # degenerate axis goes to box center
    return out


def assign_regions(centers: np.ndarray, atlas: Atlas, rescale: bool = False) -> RegionAssignment:
    """Sequentially match each cluster center to its nearest free region."""
    centers = np.asarray(centers, dtype=float)
    k = centers.shape[0]
    if k > len(atlas):
        raise MappingError(f"{k} clusters but only {len(atlas)} regions in atlas {atlas.name!r}")

    coords = atlas.coordinates()
    work = _rescale_to_box(centers, coords) if rescale else centers

    cluster_to_region: dict[int, int] = {}
    distances: dict[int, float] = {}
    used: set[int] = set()
    for cid in range(k):
        dist = np.sqrt(((coords - work[cid]) ** 2).sum(axis=1))
        for ridx in np.argsort(dist, kind="stable"):
            if int(ridx) not in used:
                used.add(int(ridx))
                cluster_to_region[cid] = int(ridx)
                distances[cid] = float(dist[ridx])
                break

    region_names = {i: r.name for i, r in enumerate(atlas.regions)}
    return RegionAssignment(
        cluster_to_region=cluster_to_region,
        distances=distances,
        region_names=region_names,
    )


def label_chunks(
    model: ClusterModel,
    assignment: RegionAssignment,
    chunks: list[TextChunk],
) -> list[tuple[tuple[str, int], str]]:
    """Give every chunk the region name of its cluster."""
    if len(model.labels) != len(chunks):
        raise MappingError(
            f"{len(model.labels)} cluster labels for {len(chunks)} chunks"
        )
    return [
        (chunk.ref, assignment.region_of(int(label)))
        for chunk, label in zip(chunks, model.labels)
    ]
