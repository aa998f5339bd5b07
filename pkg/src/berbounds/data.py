"""Two-sample containers, file ingestion, Gaussian synthesis, and the
closed-form Gaussian Bayes error.

Class 1 plays the role of the numerator density f1 and class 2 the denominator
f2; likelihood ratio estimates are evaluated at class-2 points throughout.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from .validation import (
    as_float_matrix,
    as_two_class_labels,
    check_square_distances,
    class_split,
)

__all__ = [
    "TwoSampleData",
    "DistanceData",
    "GaussianSpec",
    "load_labeled_csv",
    "load_distance_matrix",
    "two_sample_from_labels",
    "distance_data_from_arrays",
    "sample_gaussian_pair",
    "true_gaussian_ber",
    "pairwise_distances",
    "derive_seed",
]


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TwoSampleData:
    """Labeled two-class sample in feature space.

    ``prior1`` is the class-1 prior used by the bound functionals; it defaults
    to the empirical fraction when built through the loaders.
    """

    points_f1: np.ndarray
    points_f2: np.ndarray
    prior1: float

    def __post_init__(self):
        x1 = as_float_matrix(self.points_f1, "points_f1")
        x2 = as_float_matrix(self.points_f2, "points_f2")
        if x1.shape[1] != x2.shape[1]:
            raise ValueError(
                f"feature dimensions differ: {x1.shape[1]} vs {x2.shape[1]}"
            )
        if not 0.0 < self.prior1 < 1.0:
            raise ValueError(f"prior1 must lie in (0, 1), got {self.prior1}")
        object.__setattr__(self, "points_f1", _freeze(x1))
        object.__setattr__(self, "points_f2", _freeze(x2))

    @property
    def dim(self) -> int:
        return self.points_f1.shape[1]

    @property
    def n1(self) -> int:
        return self.points_f1.shape[0]

    @property
    def n2(self) -> int:
        return self.points_f2.shape[0]

    @property
    def prior2(self) -> float:
        return 1.0 - self.prior1

    def pooled(self) -> tuple[np.ndarray, np.ndarray]:
        """Stacked points and {1, 2} labels, class 1 first."""
        pts = np.vstack([self.points_f1, self.points_f2])
        labels = np.concatenate(
            [np.ones(self.n1, dtype=np.int8), np.full(self.n2, 2, dtype=np.int8)]
        )
        return pts, labels


@dataclass(frozen=True)
class DistanceData:
    """Pairwise distances with {1, 2} labels.

    ``intrinsic_dim`` feeds the k-NN volume normalization when only distances
    are known; leave it ``None`` for data where a density is not meaningful
    (spanning-tree estimates still work).
    """

    distances: np.ndarray
    labels: np.ndarray
    intrinsic_dim: int | None = None

    def __post_init__(self):
        D = np.asarray(self.distances, dtype=np.float64)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise ValueError(f"non-square distance matrix: shape {D.shape}")
        if not np.all(np.isfinite(D)):
            raise ValueError("distance matrix contains non-finite values")
        if np.any(D < 0):
            raise ValueError("distance matrix contains negative entries")
        scale = float(np.abs(D).max()) or 1.0
        if float(np.abs(D - D.T).max()) > 1e-12 * scale:
            raise ValueError("distance matrix is not symmetric")
        if np.any(np.diag(D) != 0.0):
            raise ValueError("distance matrix diagonal must be exactly zero")
        labels = np.asarray(self.labels).ravel()
        if labels.shape[0] != D.shape[0]:
            raise ValueError(
                f"label length {labels.shape[0]} does not match matrix size {D.shape[0]}"
            )
        if not np.all(np.isin(labels, (1, 2))):
            raise ValueError("labels must take values in {1, 2}")
        if not (np.any(labels == 1) and np.any(labels == 2)):
            raise ValueError("labels contain a single class; two classes are required")
        if self.intrinsic_dim is not None and self.intrinsic_dim < 1:
            raise ValueError(f"intrinsic_dim must be >= 1, got {self.intrinsic_dim}")
        object.__setattr__(self, "distances", _freeze(D.copy()))
        object.__setattr__(self, "labels", _freeze(labels.astype(np.int8)))

    @property
    def n(self) -> int:
        return self.distances.shape[0]

    def class_indices(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)

    @property
    def prior1(self) -> float:
        """Empirical class-1 fraction."""
        return float(np.mean(self.labels == 1))


@dataclass(frozen=True)
class GaussianSpec:
    """Isotropic Gaussian pair N(mean1, sigma^2 I) vs N(mean2, sigma^2 I)."""

    dim: int
    mean1: np.ndarray
    mean2: np.ndarray
    n_per_class: int
    sigma: float = 1.0
    prior1: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.n_per_class < 1:
            raise ValueError("empty sample: n_per_class must be >= 1")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not 0.0 < self.prior1 < 1.0:
            raise ValueError(f"prior1 must lie in (0, 1), got {self.prior1}")
        m1 = np.asarray(self.mean1, dtype=np.float64).ravel()
        m2 = np.asarray(self.mean2, dtype=np.float64).ravel()
        if m1.shape[0] != self.dim or m2.shape[0] != self.dim:
            raise ValueError("mean vectors must have length dim")
        object.__setattr__(self, "mean1", _freeze(m1))
        object.__setattr__(self, "mean2", _freeze(m2))

    @classmethod
    def from_shift(
        cls,
        dim: int,
        shift: float,
        n_per_class: int,
        seed: int = 0,
        sigma: float = 1.0,
        prior1: float = 0.5,
    ) -> "GaussianSpec":
        """Pair separated by ``shift`` standard deviations along the first axis."""
        mean2 = np.zeros(dim)
        mean2[0] = shift * sigma
        return cls(dim, np.zeros(dim), mean2, n_per_class, sigma, prior1, seed)

    @property
    def separation(self) -> float:
        """Distance between the means in sigma units."""
        return float(np.linalg.norm(self.mean1 - self.mean2)) / self.sigma


def _parse_float(token: str) -> float | None:
    try:
        return float(token)
    except ValueError:
        return None


def load_labeled_csv(path, label_column: str, prior1: float | None = None) -> TwoSampleData:
    """Read a header CSV with one label column; all other columns are features.

    The smaller label value becomes class 1. ``prior1`` defaults to the
    empirical class-1 fraction.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if label_column not in header:
            raise ValueError(f"{path}: label column {label_column!r} not in header {header}")
        label_idx = header.index(label_column)
        feature_names = [h for i, h in enumerate(header) if i != label_idx]
        if not feature_names:
            raise ValueError(f"{path}: no feature columns besides the label")
        rows: list[list[float]] = []
        labels: list[str] = []
        for rownum, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(
                    f"{path}: ragged row {rownum}: expected {len(header)} fields, got {len(row)}"
                )
            feats = []
            for i, cell in enumerate(row):
                if i == label_idx:
                    continue
                value = _parse_float(cell)
                if value is None:
                    raise ValueError(
                        f"{path}: non-numeric value {cell!r} at row {rownum}, column {header[i]!r}"
                    )
                feats.append(value)
            rows.append(feats)
            labels.append(row[label_idx])
    if not rows:
        raise ValueError(f"{path}: no data rows")
    X = np.asarray(rows, dtype=np.float64)
    mapped, _ = as_two_class_labels(_sortable_labels(labels))
    x1, x2 = class_split(X, mapped)
    if prior1 is None:
        prior1 = x1.shape[0] / X.shape[0]
    return TwoSampleData(x1, x2, prior1)


def _sortable_labels(raw: list[str]) -> np.ndarray:
    """Sort labels numerically when every tag parses as a number."""
    parsed = [_parse_float(s) for s in raw]
    if all(v is not None for v in parsed):
        return np.asarray(parsed)
    return np.asarray(raw)


def load_distance_matrix(path, labels_path, intrinsic_dim: int | None = None) -> DistanceData:
    """Read a square distance matrix CSV plus a one-label-per-line file.

    A non-numeric first row is treated as a header and skipped. Asymmetry up to
    a relative 1e-9 is repaired by averaging; the diagonal is forced to zero.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        raw_rows = [row for row in csv.reader(fh) if row]
    if not raw_rows:
        raise ValueError(f"{path}: empty file")
    if any(_parse_float(cell) is None for cell in raw_rows[0]):
        raw_rows = raw_rows[1:]
        if not raw_rows:
            raise ValueError(f"{path}: header-only file")
    matrix = []
    for rownum, row in enumerate(raw_rows):
        vals = []
        for colnum, cell in enumerate(row):
            value = _parse_float(cell)
            if value is None:
                raise ValueError(
                    f"{path}: non-numeric value {cell!r} at row {rownum}, column {colnum}"
                )
            vals.append(value)
        matrix.append(vals)
    widths = {len(r) for r in matrix}
    if len(widths) != 1:
        raise ValueError(f"{path}: ragged rows with widths {sorted(widths)}")
    D = check_square_distances(np.asarray(matrix), name=str(path))

    labels_path = Path(labels_path)
    tags = [line.strip() for line in labels_path.read_text(encoding="utf-8").splitlines()]
    tags = [t for t in tags if t]
    if len(tags) != D.shape[0]:
        raise ValueError(
            f"{labels_path}: {len(tags)} labels for a {D.shape[0]}-point matrix"
        )
    mapped, _ = as_two_class_labels(_sortable_labels(tags))
    return DistanceData(D, mapped, intrinsic_dim)


def two_sample_from_labels(X, y, prior1: float | None = None) -> tuple[TwoSampleData, tuple]:
    """Build :class:`TwoSampleData` from a feature matrix and a label vector."""
    X = as_float_matrix(X)
    mapped, classes = as_two_class_labels(y, X.shape[0])
    x1, x2 = class_split(X, mapped)
    if prior1 is None:
        prior1 = x1.shape[0] / X.shape[0]
    return TwoSampleData(x1, x2, prior1), classes


def distance_data_from_arrays(
    D, y, intrinsic_dim: int | None = None
) -> tuple[DistanceData, tuple]:
    """Build :class:`DistanceData` from an in-memory matrix and label vector."""
    D = check_square_distances(D)
    mapped, classes = as_two_class_labels(y, D.shape[0])
    return DistanceData(D, mapped, intrinsic_dim), classes


def sample_gaussian_pair(spec: GaussianSpec) -> TwoSampleData:
    """Draw ``n_per_class`` points from each Gaussian; class 1 is drawn first."""
    rng = np.random.default_rng(spec.seed)
    x1 = spec.mean1 + spec.sigma * rng.standard_normal((spec.n_per_class, spec.dim))
    x2 = spec.mean2 + spec.sigma * rng.standard_normal((spec.n_per_class, spec.dim))
    return TwoSampleData(x1, x2, spec.prior1)


def _norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def true_gaussian_ber(spec: GaussianSpec) -> float:
    """Exact Bayes error for the isotropic Gaussian pair.

    With separation delta = ||mean1 - mean2|| / sigma and priors (q1, q2) the
    optimal rule thresholds the projection onto the mean difference, giving
    q1 Phi(-delta/2 + ln(q2/q1)/delta) + q2 Phi(-delta/2 - ln(q2/q1)/delta);
    coincident means degrade to min(q1, q2).
    """
    q1 = spec.prior1
    q2 = 1.0 - q1
    delta = spec.separation
    if delta == 0.0:
        return min(q1, q2)
    c = math.log(q2 / q1) / delta
    return q1 * _norm_cdf(-delta / 2.0 + c) + q2 * _norm_cdf(-delta / 2.0 - c)


def pairwise_distances(data: TwoSampleData) -> DistanceData:
    """Euclidean distance matrix over the pooled sample, class 1 rows first."""
    pts, labels = data.pooled()
    D = cdist(pts, pts)
    D = (D + D.T) / 2.0
    np.fill_diagonal(D, 0.0)
    return DistanceData(D, labels, intrinsic_dim=data.dim)


def derive_seed(master_seed: int, *indices: int) -> int:
    """Deterministic child seed for trial/bound counters under one master seed."""
    seq = np.random.SeedSequence([int(master_seed), *(int(i) for i in indices)])
    return int(seq.generate_state(1, np.uint64)[0])
