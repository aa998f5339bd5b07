"""Exact k-nearest-neighbor distance queries and k-NN density profiles.

The density estimate at an evaluation point x is k / (m * c * rho^d) where rho
is the distance to the k-th nearest reference point, m the reference count, and
c the volume of the d-dimensional unit ball. Profiles pair the class-1 and
class-2 estimates at class-2 evaluation points so downstream functionals see
likelihood ratios.

Ties between equal distances are resolved by treating them as distinct order
statistics in insertion order, which is what sorting delivers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .data import DistanceData, TwoSampleData

__all__ = [
    "unit_ball_volume",
    "knn_density",
    "NeighborIndex",
    "kth_neighbor_distance",
    "DensityPair",
    "ProfileBundle",
    "build_profiles",
    "density_profiles",
    "reference_counts",
]

TREE_DIM_LIMIT = 15
DUPLICATE_SCALE = 1e-10
_LOG_CLIP = 700.0


def unit_ball_volume(dim: int) -> float:
    """Volume of the unit ball in ``dim`` dimensions, pi^(d/2)/Gamma(d/2+1)."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    return math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0)


def knn_density(k: int, m: int, dim: int, rho: float) -> float:
    """Plug-in density k / (m * c * rho^dim) at k-th neighbor distance rho."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not rho > 0:
        raise ValueError(
            "rho must be positive; duplicate points are substituted before calling"
        )
    return k / (m * unit_ball_volume(dim) * rho**dim)


class NeighborIndex:
    """Exact neighbor queries over reference points or a distance-matrix view.

    Exactly one of ``points`` / (``matrix``, ``ref_indices``) is given. The
    ``strategy`` is "auto" (spatial tree up to 15 dimensions, brute force
    beyond or for matrix views), "tree", or "brute"; both paths return
    identical distances. ``exclude_self`` marks the index as leave-one-out:
    queries are assumed to be members of the reference set and one coincident
    entry is removed per query.
    """

    def __init__(
        self,
        points: np.ndarray | None = None,
        *,
        matrix: np.ndarray | None = None,
        ref_indices: np.ndarray | None = None,
        strategy: str = "auto",
        exclude_self: bool = False,
    ):
        if (points is None) == (matrix is None):
            raise ValueError("provide exactly one of points or matrix")
        if strategy not in ("auto", "tree", "brute"):
            raise ValueError(f"unknown strategy {strategy!r}")
        self.exclude_self = exclude_self
        self._tree = None
        if points is not None:
            pts = np.ascontiguousarray(points, dtype=np.float64)
            if pts.ndim != 2 or pts.shape[0] == 0:
                raise ValueError("points must be a non-empty 2-D array")
            self.points = pts
            self.matrix = None
            self.ref_indices = None
            if strategy == "auto":
                strategy = "tree" if pts.shape[1] <= TREE_DIM_LIMIT else "brute"
            if strategy == "tree":
                self._tree = cKDTree(pts)
        else:
            if strategy == "tree":
                raise ValueError("tree strategy requires point coordinates")
            strategy = "brute"
            self.points = None
            self.matrix = np.asarray(matrix, dtype=np.float64)
            if ref_indices is None:
                ref_indices = np.arange(self.matrix.shape[1])
            self.ref_indices = np.asarray(ref_indices, dtype=np.intp)
        self.strategy = strategy

    @property
    def n_refs(self) -> int:
        if self.points is not None:
            return self.points.shape[0]
        return self.ref_indices.shape[0]

    def _brute_rows(self, queries) -> np.ndarray:
        if self.points is not None:
            Q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
            diff = Q[:, None, :] - self.points[None, :, :]
            return np.sqrt((diff * diff).sum(axis=-1))
        q_ids = np.atleast_1d(np.asarray(queries, dtype=np.intp))
        return self.matrix[np.ix_(q_ids, self.ref_indices)].copy()

    def kth_distances(
        self, queries, k_max: int, self_indices: np.ndarray | None = None
    ) -> np.ndarray:
        """Sorted distances to the 1st..k_max-th neighbors, one row per query.

        ``self_indices`` gives the position of each query inside the reference
        set; that entry is excluded (proper leave-one-out even with duplicate
        points).
        """
        eligible = self.n_refs - (1 if self_indices is not None else 0)
        if not 1 <= k_max <= eligible:
            raise ValueError(
                f"k={k_max} exceeds eligible reference count {eligible}"
            )
        if self._tree is not None:
            return self._tree_kth(queries, k_max, self_indices)
        rows = self._brute_rows(queries)
        if self_indices is not None:
            rows[np.arange(rows.shape[0]), np.asarray(self_indices, dtype=np.intp)] = np.inf
        part = np.partition(rows, k_max - 1, axis=1)[:, :k_max]
        part.sort(axis=1)
        return part

    def _tree_kth(self, queries, k_max, self_indices) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
        if self_indices is None:
            dist, _ = self._tree.query(Q, k=k_max)
            return dist.reshape(Q.shape[0], k_max)
        k_query = k_max + 1
        dist, idx = self._tree.query(Q, k=k_query)
        dist = dist.reshape(Q.shape[0], k_query)
        idx = idx.reshape(Q.shape[0], k_query)
        self_idx = np.asarray(self_indices, dtype=np.intp)
        found = idx == self_idx[:, None]
        # Drop the query's own entry; when ties hid it beyond k_max+1 every
        # retained distance is zero anyway, so dropping the last is equivalent.
        drop = np.where(found.any(axis=1), found.argmax(axis=1), k_query - 1)
        cols = np.broadcast_to(np.arange(k_query), idx.shape)
        keep = cols != drop[:, None]
        return dist[keep].reshape(Q.shape[0], k_max)


def kth_neighbor_distance(index: NeighborIndex, query, k: int) -> float:
    """Distance from ``query`` to its k-th nearest reference point.

    With ``exclude_self`` set on the index, one zero-distance entry (the query
    itself, identified by matrix row for matrix views or by exact coincidence
    for point sets) is removed before counting.
    """
    eligible = index.n_refs - (1 if index.exclude_self else 0)
    if not 1 <= k <= eligible:
        raise ValueError(f"k={k} exceeds eligible reference count {eligible}")
    if index.matrix is not None:
        q_id = int(np.asarray(query).ravel()[0])
        row = index._brute_rows([q_id])[0]
        if index.exclude_self:
            pos = np.flatnonzero(index.ref_indices == q_id)
            if pos.size:
                row[pos[0]] = np.inf
        row.sort()
        return float(row[k - 1])
    row = index._brute_rows(np.atleast_2d(query))[0]
    if index.exclude_self:
        zeros = np.flatnonzero(row == 0.0)
        if zeros.size:
            row[zeros[0]] = np.inf
    row.sort()
    return float(row[k - 1])


@dataclass(frozen=True)
class DensityPair:
    """Density estimates of both classes at one class-2 evaluation point.

    ``ratio`` is f1/f2; ``flagged`` marks a duplicate substitution (some
    neighbor distance was exactly zero).
    """

    f1: float
    f2: float
    ratio: float
    k: int
    m1: int
    m2: int
    flagged: bool


@dataclass
class ProfileBundle:
    """Density profiles for several neighbor counts sharing one query pass."""

    ks: tuple[int, ...]
    ratios: dict[int, np.ndarray]
    f1: dict[int, np.ndarray]
    f2: dict[int, np.ndarray]
    flags: dict[int, np.ndarray]
    m1: int
    m2: int
    dim: int
    n_eval: int
    n_flagged: int

    def pairs(self, k: int) -> list[DensityPair]:
        return [
            DensityPair(
                float(self.f1[k][i]),
                float(self.f2[k][i]),
                float(self.ratios[k][i]),
                k,
                self.m1,
                self.m2,
                bool(self.flags[k][i]),
            )
            for i in range(self.n_eval)
        ]


def reference_counts(
    data: TwoSampleData | DistanceData, mode: str = "loo"
) -> tuple[int, int, int]:
    """(m1, m2, n_eval) for the evaluation protocol.

    "loo" evaluates at every class-2 point with the point itself left out of
    the class-2 reference set; "split" reserves ceil(n2/2) class-2 points as
    references and evaluates at the remainder.
    """
    if mode not in ("loo", "split"):
        raise ValueError(f"unknown evaluation mode {mode!r}")
    if isinstance(data, TwoSampleData):
        n1, n2 = data.n1, data.n2
    else:
        n1 = int(data.class_indices(1).size)
        n2 = int(data.class_indices(2).size)
    if mode == "loo":
        m1, m2, n_eval = n1, n2 - 1, n2
    else:
        m2 = math.ceil(n2 / 2)
        n_eval = n2 - m2
        m1 = n1
    if n_eval < 1:
        raise ValueError(f"no evaluation points in mode {mode!r} with n2={n2}")
    if m2 < 1:
        raise ValueError(f"class-2 reference set is empty in mode {mode!r}")
    return m1, m2, n_eval


def _bbox_diameter(points: np.ndarray) -> float:
    return float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))


def build_profiles(
    data: TwoSampleData | DistanceData, ks, mode: str = "loo"
) -> ProfileBundle:
    """Compute density profiles for every k in ``ks`` with one neighbor pass.

    Zero neighbor distances (duplicate points) are substituted by
    1e-10 x data diameter and flagged. Densities and ratios are assembled in
    log space so extreme substitutions stay finite.
    """
    ks = tuple(sorted({int(k) for k in np.atleast_1d(ks)}))
    if not ks or ks[0] < 1:
        raise ValueError(f"neighbor counts must be >= 1, got {ks}")
    k_max = ks[-1]
    m1, m2, n_eval = reference_counts(data, mode)
    if k_max > m1 or k_max > m2:
        raise ValueError(
            f"k={k_max} must not exceed the reference counts (m1={m1}, m2={m2})"
        )

    if isinstance(data, TwoSampleData):
        dim = data.dim
        if mode == "loo":
            idx1 = NeighborIndex(data.points_f1)
            idx2 = NeighborIndex(data.points_f2)
            eval_pts = data.points_f2
            self2 = np.arange(data.n2)
        else:
            idx1 = NeighborIndex(data.points_f1)
            idx2 = NeighborIndex(data.points_f2[n_eval:])
            eval_pts = data.points_f2[:n_eval]
            self2 = None
        rho1 = idx1.kth_distances(eval_pts, k_max)
        rho2 = idx2.kth_distances(eval_pts, k_max, self_indices=self2)
        diameter = _bbox_diameter(np.vstack([data.points_f1, data.points_f2]))
    else:
        if data.intrinsic_dim is None:
            raise ValueError(
                "intrinsic_dim is required for k-NN density estimation on distance data"
            )
        dim = data.intrinsic_dim
        i1 = data.class_indices(1)
        i2 = data.class_indices(2)
        if mode == "loo":
            idx1 = NeighborIndex(matrix=data.distances, ref_indices=i1)
            idx2 = NeighborIndex(matrix=data.distances, ref_indices=i2)
            eval_ids = i2
            self2 = np.arange(i2.size)
        else:
            idx1 = NeighborIndex(matrix=data.distances, ref_indices=i1)
            idx2 = NeighborIndex(matrix=data.distances, ref_indices=i2[n_eval:])
            eval_ids = i2[:n_eval]
            self2 = None
        rho1 = idx1.kth_distances(eval_ids, k_max)
        rho2 = idx2.kth_distances(eval_ids, k_max, self_indices=self2)
        diameter = float(data.distances.max())

    eps = DUPLICATE_SCALE * diameter if diameter > 0 else DUPLICATE_SCALE
    log_ball = math.log(unit_ball_volume(dim))
    ratios: dict[int, np.ndarray] = {}
    f1s: dict[int, np.ndarray] = {}
    f2s: dict[int, np.ndarray] = {}
    flags: dict[int, np.ndarray] = {}
    n_flagged = 0
    for k in ks:
        r1 = rho1[:, k - 1]
        r2 = rho2[:, k - 1]
        flag = (r1 == 0.0) | (r2 == 0.0)
        r1 = np.where(r1 == 0.0, eps, r1)
        r2 = np.where(r2 == 0.0, eps, r2)
        log_r1 = np.log(r1)
        log_r2 = np.log(r2)
        log_f1 = math.log(k) - math.log(m1) - log_ball - dim * log_r1
        log_f2 = math.log(k) - math.log(m2) - log_ball - dim * log_r2
        log_ratio = math.log(m2) - math.log(m1) + dim * (log_r2 - log_r1)
        ratios[k] = np.exp(np.clip(log_ratio, -_LOG_CLIP, _LOG_CLIP))
        f1s[k] = np.exp(np.clip(log_f1, -_LOG_CLIP, _LOG_CLIP))
        f2s[k] = np.exp(np.clip(log_f2, -_LOG_CLIP, _LOG_CLIP))
        flags[k] = flag
        n_flagged += int(flag.sum())
    return ProfileBundle(
        ks, ratios, f1s, f2s, flags, m1, m2, dim, n_eval, n_flagged
    )


def density_profiles(
    data: TwoSampleData | DistanceData, k: int, mode: str = "loo"
) -> list[DensityPair]:
    """Density profile at every evaluation point for a single neighbor count."""
    return build_profiles(data, (k,), mode).pairs(int(k))
