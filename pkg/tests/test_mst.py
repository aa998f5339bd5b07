import numpy as np
import pytest

from _oracles import exhaustive_mst
from berbounds.data import DistanceData, TwoSampleData, pairwise_distances
from berbounds.mst import (
    hp_divergence_from_mst,
    minimum_spanning_tree,
    mst_from_points,
    mst_statistics,
)


def _random_symmetric(rng, n):
    W = rng.uniform(0.5, 2.0, size=(n, n))
    D = (W + W.T) / 2.0
    np.fill_diagonal(D, 0.0)
    return D


def test_two_clusters_single_bridge():
    """Points {0,1} vs {10,11}: the tree is a path with one cross edge, so
    R = 1 and the harmonic statistic is 1 - 1*(2+2)/(2*2*2) = 0.5."""
    pts = np.array([[0.0], [1.0], [10.0], [11.0]])
    labels = np.array([1, 1, 2, 2])
    result = mst_from_points(pts, labels)
    assert result.cross_count == 1
    assert result.total_weight == pytest.approx(11.0)
    data = TwoSampleData(pts[:2], pts[2:], 0.5)
    stats = mst_statistics(data)
    assert stats.value == pytest.approx(0.5)
    assert stats.raw == pytest.approx(0.5)
    assert not stats.clamped


def test_alternating_classes_clamp_to_zero():
    """Points 0,4 vs 2,6 interleave, every tree edge crosses (R = 3), the raw
    statistic is 1 - 3*4/8 = -0.5 and the estimate clamps to 0."""
    data = TwoSampleData(np.array([[0.0], [4.0]]), np.array([[2.0], [6.0]]), 0.5)
    stats = mst_statistics(data)
    assert stats.result.cross_count == 3
    assert stats.raw == pytest.approx(-0.5)
    assert stats.value == 0.0
    assert stats.clamped


def test_harmonic_vs_arithmetic_normalization():
    data = TwoSampleData(np.array([[0.0]]), np.array([[10.0], [11.0], [12.0]]), 0.5)
    harmonic = mst_statistics(data, "harmonic")
    arithmetic = mst_statistics(data, "arithmetic")
    assert harmonic.result.cross_count == 1
    assert harmonic.raw == pytest.approx(1.0 - 4.0 / 6.0)
    assert arithmetic.raw == pytest.approx(0.5)


def test_normalizations_agree_for_balanced_classes():
    rng = np.random.default_rng(17)
    data = TwoSampleData(rng.normal(size=(12, 2)), rng.normal(1, 1, (12, 2)), 0.5)
    h = mst_statistics(data, "harmonic")
    a = mst_statistics(data, "arithmetic")
    assert h.value == pytest.approx(a.value, rel=1e-14)


def test_unknown_normalization_rejected():
    data = TwoSampleData(np.zeros((2, 1)), np.ones((2, 1)), 0.5)
    with pytest.raises(ValueError, match="normalization"):
        mst_statistics(data, "geometric")


def test_prim_matches_exhaustive_enumeration():
    rng = np.random.default_rng(23)
    labels = np.array([1, 1, 1, 2, 2, 2, 2])
    for _ in range(30):
        D = _random_symmetric(rng, 7)
        dd = DistanceData(D, labels)
        result = minimum_spanning_tree(dd)
        best_total, best_edges = exhaustive_mst(D)
        assert result.total_weight == pytest.approx(best_total, rel=1e-12)
        assert {(i, j) for i, j, _ in result.edges} == best_edges


def test_point_and_matrix_paths_build_the_same_tree():
    rng = np.random.default_rng(5)
    x1 = rng.integers(0, 12, size=(8, 2)).astype(float)
    x2 = rng.integers(0, 12, size=(7, 2)).astype(float) + 0.5
    data = TwoSampleData(x1, x2, 0.5)
    pts, labels = data.pooled()
    from_points = mst_from_points(pts, labels)
    from_matrix = minimum_spanning_tree(pairwise_distances(data))
    assert from_points.edges == from_matrix.edges
    assert from_points.cross_count == from_matrix.cross_count


def test_equal_distances_tie_break_is_lexicographic():
    D = np.ones((4, 4)) - np.eye(4)
    dd = DistanceData(D, np.array([1, 2, 1, 2]))
    result = minimum_spanning_tree(dd)
    assert [(i, j) for i, j, _ in result.edges] == [(0, 1), (0, 2), (0, 3)]


def test_tree_shape_and_connectivity():
    rng = np.random.default_rng(31)
    data = TwoSampleData(rng.normal(size=(20, 3)), rng.normal(2, 1, (15, 3)), 0.5)
    stats = mst_statistics(data)
    edges = stats.result.edges
    n = 35
    assert len(edges) == n - 1
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j, w in edges:
        assert 0 <= i < j < n
        assert w > 0
        parent[find(i)] = find(j)
    assert len({find(v) for v in range(n)}) == 1
    assert stats.result.total_weight == pytest.approx(
        sum(w for _, _, w in edges), rel=1e-12
    )


def test_cross_count_at_least_one_with_two_classes():
    for seed in range(5):
        r = np.random.default_rng(seed)
        data = TwoSampleData(r.normal(size=(10, 2)), r.normal(5, 1, (8, 2)), 0.5)
        assert mst_statistics(data).result.cross_count >= 1


def test_deterministic_across_reruns():
    rng = np.random.default_rng(13)
    data = TwoSampleData(rng.normal(size=(25, 2)), rng.normal(1, 1, (25, 2)), 0.5)
    first = mst_statistics(data)
    second = mst_statistics(data)
    assert first.result.edges == second.result.edges
    assert first.value == second.value


def test_divergence_helper_matches_statistics():
    rng = np.random.default_rng(2)
    data = TwoSampleData(rng.normal(size=(10, 2)), rng.normal(3, 1, (10, 2)), 0.5)
    assert hp_divergence_from_mst(data) == mst_statistics(data).value


def test_too_few_points_rejected():
    with pytest.raises(ValueError, match="two points"):
        mst_from_points(np.zeros((1, 2)), np.array([1]))


def test_label_length_mismatch_rejected():
    with pytest.raises(ValueError, match="label length"):
        mst_from_points(np.zeros((3, 2)), np.array([1, 2]))
