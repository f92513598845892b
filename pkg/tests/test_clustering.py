import numpy as np
import pytest

from emotionatlas.clustering import (
    ClusteringError,
    cluster,
    kmeans_plusplus_init,
    lloyd_iterations,
)


def make_blobs(seed, k=3, per=20, spread=1.0, separation=100.0):
    rng = np.random.default_rng(seed)
    centers = separation * np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])[:k]
    points = np.concatenate(
        [c + spread * rng.standard_normal((per, 3)) for c in centers]
    )
    truth = np.repeat(np.arange(k), per)
    return points, truth


def same_partition(a, b):
    """True iff two labelings induce the identical partition (ARI would be 1)."""
    mapping: dict[int, int] = {}
    reverse: dict[int, int] = {}
    for x, y in zip(a, b):
        if mapping.setdefault(int(x), int(y)) != int(y):
            return False
        if reverse.setdefault(int(y), int(x)) != int(x):
            return False
    return True


def test_single_point_degenerate():
    model = cluster(np.array([[1.0, 2.0, 3.0]]), n_regions=25)
    assert model.k == 1
    assert np.allclose(model.centers[0], [1.0, 2.0, 3.0])
    assert model.inertia == 0.0
    assert model.labels.tolist() == [0]


def test_planted_blobs_recovered():
    points, truth = make_blobs(seed=0)
    model = cluster(points, n_regions=3)
    assert same_partition(truth, model.labels)


def test_k_is_min_of_regions_and_samples():
    rng = np.random.default_rng(2)
    for n in (1, 10, 30):
        model = cluster(rng.standard_normal((n, 3)), n_regions=25)
        assert model.k == min(25, n)


def test_every_cluster_owns_a_point():
    rng = np.random.default_rng(3)
    points = rng.standard_normal((30, 3))
    model = cluster(points, n_regions=25)
    assert set(model.labels.tolist()) == set(range(model.k))


def test_deterministic_across_runs():
    points, _ = make_blobs(seed=5, per=10)
    a = cluster(points, n_regions=7, seed=42)
    b = cluster(points, n_regions=7, seed=42)
    assert a.labels.tolist() == b.labels.tolist()
    assert a.centers.tobytes() == b.centers.tobytes()
    assert a.inertia == b.inertia


def test_seed_changes_restart_stream():
    rng = np.random.default_rng(8)
    points = rng.standard_normal((40, 3))
    a = cluster(points, n_regions=6, seed=1, restarts=1)
    b = cluster(points, n_regions=6, seed=2, restarts=1)
    assert not np.array_equal(a.centers, b.centers)


def test_inertia_history_non_increasing():
    rng = np.random.default_rng(4)
    for trial in range(10):
        points = rng.standard_normal((60, 3))
        model = cluster(points, n_regions=8, seed=trial)
        hist = model.inertia_history
        assert all(hist[i + 1] <= hist[i] + 1e-9 for i in range(len(hist) - 1))


def test_best_of_restarts_selected():
    rng = np.random.default_rng(6)
    points = rng.standard_normal((50, 3))
    model = cluster(points, n_regions=5, restarts=10)
    assert len(model.restart_inertias) == 10
    assert model.inertia <= min(model.restart_inertias) + 1e-9


def test_labels_are_argmin_of_final_centers():
    rng = np.random.default_rng(7)
    points = rng.standard_normal((80, 3))
    model = cluster(points, n_regions=6)
    d2 = ((points[:, None, :] - model.centers[None, :, :]) ** 2).sum(axis=2)
    assert np.array_equal(model.labels, np.argmin(d2, axis=1))
    assert model.inertia == pytest.approx(d2[np.arange(80), model.labels].sum(), rel=1e-8)


def test_empty_cluster_repaired_at_farthest_point():
    points = np.array(
        [[0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [0.2, 0.0, 0.0], [50.0, 0.0, 0.0]]
    )
    # a center parked far away owns nothing on the first assignment
    init = np.array([[0.0, 0.0, 0.0], [0.15, 0.0, 0.0], [-1000.0, 0.0, 0.0]])
    centers, labels, _ = lloyd_iterations(points, init)
    assert set(labels.tolist()) == {0, 1, 2}
    # the stranded center was reseeded at the farthest point
    assert any(np.allclose(c, [50.0, 0.0, 0.0]) for c in centers)


def test_kmeans_plusplus_spreads_centers():
    points, _ = make_blobs(seed=9, per=15)
    rng = np.random.default_rng(0)
    init = kmeans_plusplus_init(points, 3, rng)
    # one center per blob: pairwise distances are all large
    dists = np.linalg.norm(init[:, None, :] - init[None, :, :], axis=2)
    assert (dists[np.triu_indices(3, 1)] > 50).all()


def test_non_finite_points_rejected():
    with pytest.raises(ClusteringError):
        cluster(np.array([[np.nan, 0.0, 0.0]]), n_regions=2)
    with pytest.raises(ClusteringError):
        cluster(np.empty((0, 3)), n_regions=2)
    with pytest.raises(ClusteringError):
        cluster(np.zeros((3, 3)), n_regions=0)
