"""Minimum spanning tree over the pooled sample and the cross-class statistic.

The fraction of tree edges joining opposite classes estimates how much the two
class distributions overlap: few cross-class edges mean well-separated
classes. The divergence estimate is 1 - R * (m+n) / (2mn) clamped to [0, 1]
("harmonic" normalization; "arithmetic" uses 1 - 2R/(m+n), identical for
balanced samples).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import DistanceData, TwoSampleData

__all__ = [
    "MstResult",
    "minimum_spanning_tree",
    "mst_from_points",
    "hp_divergence_from_mst",
    "MstStatistics",
    "mst_statistics",
]


@dataclass(frozen=True)
class MstResult:
    """Tree edges (i, j, weight) with i < j, in growth order."""

    edges: tuple[tuple[int, int, float], ...]
    cross_count: int
    total_weight: float


def _prim(n: int, row_of) -> list[tuple[int, int, float]]:
    """Dense Prim, O(n^2); equal-weight choices resolved by the
    lexicographically smallest (i, j) edge so reruns produce the same tree."""
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    key = np.asarray(row_of(0), dtype=np.float64).copy()
    key[0] = np.inf
    parent = np.zeros(n, dtype=np.intp)
    edges: list[tuple[int, int, float]] = []
    for _ in range(n - 1):
        masked = np.where(in_tree, np.inf, key)
        best = masked.min()
        candidates = np.flatnonzero(masked == best)
        if candidates.size > 1:
            ei = np.minimum(parent[candidates], candidates)
            ej = np.maximum(parent[candidates], candidates)
            v = int(candidates[np.lexsort((ej, ei))[0]])
        else:
            v = int(candidates[0])
        u = int(parent[v])
        edges.append((min(u, v), max(u, v), float(key[v])))
        in_tree[v] = True
        nd = np.asarray(row_of(v), dtype=np.float64)
        better = ~in_tree & (nd < key)
        key[better] = nd[better]
        parent[better] = v
        ties = np.flatnonzero(~in_tree & ~better & (nd == key))
        if ties.size:
            new_i = np.minimum(v, ties)
            new_j = np.maximum(v, ties)
            old_i = np.minimum(parent[ties], ties)
            old_j = np.maximum(parent[ties], ties)
            upgrade = (new_i < old_i) | ((new_i == old_i) & (new_j < old_j))
            parent[ties[upgrade]] = v
    return edges


def _result_from_edges(edges, labels: np.ndarray) -> MstResult:
    cross = sum(1 for i, j, _ in edges if labels[i] != labels[j])
    total = math.fsum(w for _, _, w in edges)
    return MstResult(tuple(edges), cross, total)


def minimum_spanning_tree(dist: DistanceData) -> MstResult:
    """Exact MST of the distance matrix with deterministic tie-breaking."""
    n = dist.n
    if n < 2:
        raise ValueError(f"need at least two points, got {n}")
    D = dist.distances
    return _result_from_edges(_prim(n, lambda v: D[v]), dist.labels)


def mst_from_points(points: np.ndarray, labels: np.ndarray) -> MstResult:
    """MST of a point cloud with distance rows computed on the fly.

    Same tree as ``minimum_spanning_tree`` over the pairwise matrix, without
    materializing it; rows are plain sqrt-of-squared-differences.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError("need at least two points")
    if labels.shape[0] != pts.shape[0]:
        raise ValueError("label length does not match point count")

    def row_of(v: int) -> np.ndarray:
        diff = pts - pts[v]
        return np.sqrt((diff * diff).sum(axis=1))

    return _result_from_edges(_prim(pts.shape[0], row_of), labels)


def _hp_value(cross_count: int, n1: int, n2: int, normalization: str) -> float:
    if normalization == "harmonic":
        return 1.0 - cross_count * (n1 + n2) / (2.0 * n1 * n2)
    if normalization == "arithmetic":
        return 1.0 - 2.0 * cross_count / (n1 + n2)
    raise ValueError(f"unknown normalization {normalization!r}")


@dataclass(frozen=True)
class MstStatistics:
    """Divergence estimate derived from the cross-class edge count."""

    result: MstResult
    n1: int
    n2: int
    raw: float
    value: float
    clamped: bool


def mst_statistics(
    data: DistanceData | TwoSampleData, normalization: str = "harmonic"
) -> MstStatistics:
    if isinstance(data, TwoSampleData):
        pts, labels = data.pooled()
        result = mst_from_points(pts, labels)
        n1, n2 = data.n1, data.n2
    else:
        result = minimum_spanning_tree(data)
        n1 = int(data.class_indices(1).size)
        n2 = int(data.class_indices(2).size)
    raw = _hp_value(result.cross_count, n1, n2, normalization)
    value = min(max(raw, 0.0), 1.0)
    return MstStatistics(result, n1, n2, raw, value, value != raw)


def hp_divergence_from_mst(
    data: DistanceData | TwoSampleData, normalization: str = "harmonic"
) -> float:
    """Divergence estimate in [0, 1] from the cross-class MST edge count."""
    return mst_statistics(data, normalization).value
