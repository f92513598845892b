import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emotionatlas.atlas import Atlas, BrainRegion
from emotionatlas.clustering import cluster
from emotionatlas.corpus import TextChunk
from emotionatlas.mapping import MappingError, RegionAssignment, assign_regions, label_chunks


def synthetic_atlas(coords, name="syn"):
    return Atlas(
        name=name,
        regions=tuple(
            BrainRegion(
                name=f"region{i:02d}", mni=tuple(float(v) for v in c),
                hemisphere="midline", system="limbic",
            )
            for i, c in enumerate(coords)
        ),
    )


def greedy_oracle(centers, coords):
    """Straightforward restatement of the sequential nearest-free rule."""
    used: set[int] = set()
    out: dict[int, int] = {}
    for cid, center in enumerate(centers):
        ranked = sorted(
            (math.dist(center, region), idx) for idx, region in enumerate(coords)
        )
        for _, idx in ranked:
            if idx not in used:
                used.add(idx)
                out[cid] = idx
                break
    return out


def test_identity_fixed_point():
    coords = np.array([[0, 0, 0], [10, 0, 0], [0, 10, 0], [0, 0, 10]], dtype=float)
    atlas = synthetic_atlas(coords)
    assignment = assign_regions(coords.copy(), atlas)
    assert assignment.cluster_to_region == {0: 0, 1: 1, 2: 2, 3: 3}
    assert all(d == 0.0 for d in assignment.distances.values())


def test_contended_region_goes_to_first_cluster():
    # both clusters closest to region 0; cluster 0 claims it first
    atlas = synthetic_atlas([[0.0, 0.0, 0.0], [5.0, 0.0, 0.0]])
    centers = np.array([[0.4, 0.0, 0.0], [0.1, 0.0, 0.0]])
    assignment = assign_regions(centers, atlas)
    assert assignment.cluster_to_region == {0: 0, 1: 1}
    assert assignment.distances[0] == pytest.approx(0.4)
    assert assignment.distances[1] == pytest.approx(4.9)


def test_single_cluster_takes_global_nearest():
    atlas = synthetic_atlas([[0, 0, 0], [1, 1, 1], [9, 9, 9]])
    assignment = assign_regions(np.array([[1.2, 1.0, 1.0]]), atlas)
    assert assignment.cluster_to_region == {0: 1}


def test_distance_tie_breaks_to_lower_region_index():
    atlas = synthetic_atlas([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    assignment = assign_regions(np.array([[0.0, 0.0, 0.0]]), atlas)
    assert assignment.cluster_to_region == {0: 0}


def test_more_clusters_than_regions_rejected():
    atlas = synthetic_atlas([[0, 0, 0]])
    with pytest.raises(MappingError):
        assign_regions(np.zeros((2, 3)), atlas)


def test_greedy_total_can_exceed_optimal_matching():
    # documented 2x2 instance: greedy picks (c0->A, c1->B) for 0.1 + 1.1,
    # while the optimal matching (c0->B, c1->A) totals 0.9 + 0.1
    atlas = synthetic_atlas([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])  # A, B
    centers = np.array([[0.9, 0.0, 0.0], [1.1, 0.0, 0.0]])
    assignment = assign_regions(centers, atlas)
    greedy_total = sum(assignment.distances.values())
    optimal_total = (
        math.dist(centers[0], atlas.regions[1].mni)
        + math.dist(centers[1], atlas.regions[0].mni)
    )
    assert greedy_total == pytest.approx(0.1 + 1.1)
    assert optimal_total == pytest.approx(0.9 + 0.1)
    assert greedy_total > optimal_total


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_injective_and_matches_oracle(data):
    k = data.draw(st.integers(min_value=1, max_value=8))
    n_regions = data.draw(st.integers(min_value=k, max_value=12))
    rng = np.random.default_rng(data.draw(st.integers(min_value=0, max_value=10_000)))
    centers = rng.uniform(-50, 50, size=(k, 3))
    coords = rng.uniform(-50, 50, size=(n_regions, 3))
    atlas = synthetic_atlas(coords)

    assignment = assign_regions(centers, atlas)
    assigned = list(assignment.cluster_to_region.values())
    assert len(assigned) == k
    assert len(set(assigned)) == k  # injective
    assert assignment.cluster_to_region == greedy_oracle(centers, coords)


def test_rescale_maps_centers_into_atlas_box():
    atlas = synthetic_atlas([[-50, -50, -50], [50, 50, 50], [0, 0, 0]])
    centers = np.array([[0.001, 0.001, 0.001], [0.002, 0.002, 0.002]])
    plain = assign_regions(centers, atlas)
    rescaled = assign_regions(centers, atlas, rescale=True)
    # unscaled: both centers hug the origin region; rescaled: they span the box
    assert plain.cluster_to_region[0] == 2
    assert rescaled.cluster_to_region == {0: 0, 1: 1}


def test_label_chunks_composition():
    atlas = synthetic_atlas([[0, 0, 0], [100, 0, 0]])
    points = np.array([[1.0, 0, 0], [2.0, 0, 0], [99.0, 0, 0]])
    model = cluster(points, n_regions=2, seed=1)
    assignment = assign_regions(model.centers, atlas)
    chunks = [
        TextChunk(doc_id="d", chunk_index=i, text=f"c{i}", group="g", label=None)
        for i in range(3)
    ]
    labeled = label_chunks(model, assignment, chunks)
    assert [ref for ref, _ in labeled] == [("d", 0), ("d", 1), ("d", 2)]
    assert labeled[0][1] == labeled[1][1]
    assert labeled[0][1] != labeled[2][1]


def test_label_chunks_length_mismatch():
    atlas = synthetic_atlas([[0, 0, 0]])
    model = cluster(np.zeros((1, 3)), n_regions=1)
    assignment = assign_regions(model.centers, atlas)
    with pytest.raises(MappingError):
        label_chunks(model, assignment, [])


def test_label_chunks_empty_model_empty_chunks():
    from emotionatlas.clustering import ClusterModel

    atlas = synthetic_atlas([[0, 0, 0]])
    empty_model = ClusterModel(
        centers=np.empty((0, 3)), labels=np.empty(0, dtype=int),
        inertia=0.0, seed=42, restarts=10,
    )
    assignment = assign_regions(empty_model.centers, atlas)
    assert label_chunks(empty_model, assignment, []) == []


def test_assignment_rows_export():
    atlas = synthetic_atlas([[0, 0, 0], [3, 0, 0]])
    assignment = assign_regions(np.array([[3.0, 0, 0], [0.5, 0, 0]]), atlas)
    rows = assignment.to_rows()
    assert rows == [(0, "region01", 0.0), (1, "region00", 0.5)]
    assert isinstance(assignment, RegionAssignment)
