"""Input validation helpers shared by the loaders and the estimator API."""
from __future__ import annotations

import numpy as np

ASYMMETRY_TOLERANCE = 1e-9


def as_float_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array with finite entries."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"{name} is empty (shape {arr.shape})")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_two_class_labels(y, n: int | None = None) -> tuple[np.ndarray, tuple]:
    """Map a two-valued label vector onto {1, 2}.

    The smaller value (numpy sort order) becomes class 1. Returns the mapped
    int array and the original class values as a tuple.
    """
    labels = np.asarray(y).ravel()
    if n is not None and labels.shape[0] != n:
        raise ValueError(f"label length {labels.shape[0]} does not match {n} rows")
    classes = np.unique(labels)
    if classes.shape[0] < 2:
        raise ValueError("labels contain a single class; two classes are required")
    if classes.shape[0] > 2:
        raise ValueError(
            f"labels contain more than two classes: {classes.tolist()!r}"
        )
    mapped = np.where(labels == classes[0], 1, 2).astype(np.int8)
    return mapped, (classes[0], classes[1])


def check_square_distances(
    D, *, asym_tol: float = ASYMMETRY_TOLERANCE, name: str = "distance matrix"
) -> np.ndarray:
    """Validate a distance matrix: square, finite, non-negative, symmetric.

    Relative asymmetry up to ``asym_tol`` is repaired by averaging with the
    transpose; anything larger is an error. The diagonal is forced to zero.
    """
    arr = np.asarray(D, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"non-square {name}: shape {arr.shape}")
    if arr.shape[0] < 2:
        raise ValueError(f"{name} needs at least two points, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    neg = np.argwhere(arr < 0)
    if neg.size:
        i, j = neg[0]
        raise ValueError(f"negative distance at ({i}, {j}): {arr[i, j]}")
    scale = float(np.abs(arr).max()) or 1.0
    asym = float(np.abs(arr - arr.T).max()) / scale
    if asym > asym_tol:
        raise ValueError(
            f"{name} asymmetry {asym:.3e} exceeds relative tolerance {asym_tol:.1e}"
        )
    if asym > 0.0:
        arr = (arr + arr.T) / 2.0
    else:
        arr = arr.copy()
    np.fill_diagonal(arr, 0.0)
    return arr


def class_split(X: np.ndarray, labels12: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split rows of X by mapped {1, 2} labels."""
    return X[labels12 == 1], X[labels12 == 2]
