"""Bias-cancelling weighted ensembles of k-NN plug-in estimates.

A scale grid {s_1..s_L} induces neighbor counts k(s) = round(s * sqrt(m)).
Weights sum to one and null the power-basis sums sum_l w_l s_l^(j/d) for
j = 1..d-1, which cancels the leading bias terms of the plug-in estimators
while the weighted average keeps variance at the parametric rate. The
exact-null solution is the minimum-norm point of that constraint set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .data import DistanceData, TwoSampleData
from .functionals import Functional
from .neighbors import ProfileBundle, build_profiles, reference_counts

__all__ = [
    "EnsembleConfig",
    "WeightVector",
    "default_k_scales",
    "neighbor_counts",
    "solve_weights",
    "base_estimate",
    "EnsembleMachinery",
    "prepare_ensemble",
    "combine_with_functional",
    "EnsembleEstimate",
    "ensemble_details",
    "ensemble_estimate",
]

SCALE_RANGE = (0.3, 3.0)
CONDITION_LIMIT = 1e12
EXACT_RESIDUAL_LIMIT = 1e-9
RELAXED_TOLERANCE = 1e-8


@dataclass(frozen=True)
class EnsembleConfig:
    """Scale grid and weight policy for an ensemble estimate.

    ``norm_budget`` is the relaxed-mode cap on ||w||_2; it defaults to three
    times the exact-null norm, in which case the exact solution is already
    optimal for the relaxed program.
    """

    k_scales: tuple[float, ...]
    weight_mode: str = "exact-null"
    norm_budget: float | None = None

    def __post_init__(self):
        scales = tuple(float(s) for s in self.k_scales)
        if not scales:
            raise ValueError("k_scales is empty")
        if any(s <= 0 for s in scales):
            raise ValueError(f"k_scales must be positive, got {scales}")
        if len(set(scales)) != len(scales):
            raise ValueError(f"k_scales must be distinct, got {scales}")
        if self.weight_mode not in ("exact-null", "relaxed"):
            raise ValueError(f"unknown weight_mode {self.weight_mode!r}")
        if self.norm_budget is not None and self.norm_budget <= 0:
            raise ValueError("norm_budget must be positive")
        object.__setattr__(self, "k_scales", scales)


def default_k_scales(dim: int) -> tuple[float, ...]:
    """max(dim, 3) scales evenly spaced on [0.3, 3.0]."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    count = max(dim, 3)
    return tuple(float(s) for s in np.linspace(SCALE_RANGE[0], SCALE_RANGE[1], count))


def neighbor_counts(k_scales, m: int) -> tuple[int, ...]:
    """k(s) = round-half-up(s * sqrt(m)) clamped to [1, m-1], one per scale."""
    if m < 2:
        raise ValueError(f"reference count m={m} is too small")
    root = math.sqrt(m)
    ks = tuple(
        min(max(int(math.floor(float(s) * root + 0.5)), 1), m - 1) for s in k_scales
    )
    if len(set(ks)) != len(ks):
        raise ValueError(
            f"scale grid collapses to duplicate neighbor counts {ks} at m={m}; "
            "widen the spread of k_scales"
        )
    return ks


@dataclass(frozen=True)
class WeightVector:
    """Solved ensemble weights with constraint residuals.

    ``residuals[0]`` is |sum(w) - 1|; the remaining entries are the absolute
    power-basis sums that exact-null mode drives to zero.
    """

    weights: np.ndarray
    residuals: np.ndarray
    norm: float
    mode: str

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        r = np.asarray(self.residuals, dtype=np.float64)
        w.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "residuals", r)


def _constraint_system(k_scales, dim: int) -> tuple[np.ndarray, np.ndarray]:
    scales = np.asarray(k_scales, dtype=np.float64)
    rows = [np.ones_like(scales)]
    rows.extend(scales ** (j / dim) for j in range(1, dim))
    A = np.vstack(rows)
    b = np.zeros(dim)
    b[0] = 1.0
    return A, b


def _min_norm_solution(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    # QR of A^T gives the minimum-norm solution; refinement pushes the
    # residual to rounding level even near the conditioning gate.
    Q, R = np.linalg.qr(A.T)
    w = Q @ solve_triangular(R.T, b, lower=True)
    for _ in range(3):
        r = b - A @ w
        if np.abs(r).max() <= 1e-13:
            break
        w = w + Q @ solve_triangular(R.T, r, lower=True)
    return w


def _project_sum_one_capped(w: np.ndarray, budget: float) -> np.ndarray:
    # Exact projection onto {sum w = 1} intersected with the norm ball: the
    # intersection is a ball inside the hyperplane centered at the uniform
    # vector, so project onto the plane then radially toward the center.
    L = w.shape[0]
    h = w - (w.sum() - 1.0) / L
    if h @ h <= budget * budget:
        return h
    center = np.full(L, 1.0 / L)
    radial = h - center
    radius = math.sqrt(max(budget * budget - 1.0 / L, 0.0))
    return center + radial * (radius / np.linalg.norm(radial))


def _relaxed_minimax(
    basis: np.ndarray, start: np.ndarray, budget: float
) -> np.ndarray:
    """Minimize max_j |basis_j . w| over {sum w = 1, ||w|| <= budget}.

    Projected subgradient descent with diminishing steps, stopping once the
    best value stops improving by more than RELAXED_TOLERANCE.
    """
    w = _project_sum_one_capped(start, budget)
    if basis.shape[0] == 0:
        return w
    best_w = w.copy()
    best_f = float(np.abs(basis @ w).max())
    stall = 0
    step0 = max(1.0, best_f)
    for it in range(1, 20001):
        vals = basis @ w
        j = int(np.abs(vals).argmax())
        g = math.copysign(1.0, vals[j]) * basis[j]
        gn = np.linalg.norm(g)
        if gn == 0.0:
            break
        w = _project_sum_one_capped(w - (step0 / math.sqrt(it)) * g / gn, budget)
        f = float(np.abs(basis @ w).max())
        if f < best_f - RELAXED_TOLERANCE:
            best_f, best_w, stall = f, w.copy(), 0
        else:
            stall += 1
            if stall >= 200:
                break
    return best_w


def solve_weights(
    k_scales, dim: int, mode: str = "exact-null", norm_budget: float | None = None
) -> WeightVector:
    """Solve for ensemble weights over the scale grid.

    exact-null: minimum-norm weights with sum(w) = 1 and every power-basis sum
    exactly nulled; requires more scales than dim-1 and a well-conditioned
    grid. relaxed: minimize the maximum absolute basis sum subject to
    sum(w) = 1 and ||w||_2 <= norm_budget (default 3x the exact-null norm,
    which admits the exact solution).
    """
    config = EnsembleConfig(tuple(k_scales), mode, norm_budget)
    scales = np.asarray(config.k_scales, dtype=np.float64)
    L = scales.shape[0]
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if L <= dim - 1:
        raise ValueError(
            f"rank condition violated: need more than dim-1={dim - 1} scales "
            f"to null the bias basis, got L={L}"
        )
    A, b = _constraint_system(scales, dim)
    gram_cond = float(np.linalg.cond(A @ A.T))
    if gram_cond > CONDITION_LIMIT:
        raise ValueError(
            f"constraint system is ill-conditioned (cond(AA^T)={gram_cond:.3e}); "
            "choose a wider or smaller scale grid"
        )
    w_exact = _min_norm_solution(A, b)
    exact_norm = float(np.linalg.norm(w_exact))

    if mode == "exact-null":
        residuals = np.abs(A @ w_exact - b)
        if residuals.max() > EXACT_RESIDUAL_LIMIT:
            raise ValueError(
                f"weight solve residual {residuals.max():.3e} exceeds "
                f"{EXACT_RESIDUAL_LIMIT:.1e}; the scale grid is too close to singular"
            )
        return WeightVector(w_exact, residuals, exact_norm, mode)

    budget = norm_budget if norm_budget is not None else 3.0 * exact_norm
    if budget * budget < 1.0 / L - 1e-15:
        raise ValueError(
            f"norm_budget {budget} is infeasible: the sum constraint forces "
            f"||w|| >= {1.0 / math.sqrt(L):.6f}"
        )
    if exact_norm <= budget:
        w = w_exact
    else:
        w = _relaxed_minimax(A[1:], w_exact * (budget / exact_norm), budget)
    residuals = np.abs(A @ w - b)
    return WeightVector(w, residuals, float(np.linalg.norm(w)), mode)


@dataclass
class EnsembleMachinery:
    """Shared profile bundle and weights, reusable across functionals."""

    bundle: ProfileBundle
    weight_vector: WeightVector
    neighbor_ks: tuple[int, ...]
    dim: int


def _data_dim(data: TwoSampleData | DistanceData) -> int:
    if isinstance(data, TwoSampleData):
        return data.dim
    if data.intrinsic_dim is None:
        raise ValueError(
            "intrinsic_dim is required for k-NN ensemble estimation on distance data"
        )
    return data.intrinsic_dim


def prepare_ensemble(
    data: TwoSampleData | DistanceData,
    config: EnsembleConfig | None = None,
    mode: str = "loo",
) -> EnsembleMachinery:
    """Resolve the config, solve weights, and build the shared profiles."""
    dim = _data_dim(data)
    if config is None:
        config = EnsembleConfig(default_k_scales(dim))
    m1, m2, _ = reference_counts(data, mode)
    m_eff = min(m1, m2)
    ks = neighbor_counts(config.k_scales, m_eff)
    wv = solve_weights(config.k_scales, dim, config.weight_mode, config.norm_budget)
    bundle = build_profiles(data, ks, mode)
    return EnsembleMachinery(bundle, wv, ks, dim)


def combine_with_functional(
    machinery: EnsembleMachinery, functional: Functional
) -> tuple[float, np.ndarray]:
    """Weighted combination of the per-k plug-in averages for one functional."""
    bases = np.array(
        [
            float(np.mean(functional.phi(machinery.bundle.ratios[k])))
            for k in machinery.neighbor_ks
        ]
    )
    return float(machinery.weight_vector.weights @ bases), bases


def base_estimate(
    data: TwoSampleData | DistanceData,
    functional: Functional,
    k: int,
    mode: str = "loo",
) -> float:
    """Single-k plug-in estimate: the average of phi over the profile ratios."""
    bundle = build_profiles(data, (k,), mode)
    return float(np.mean(functional.phi(bundle.ratios[int(k)])))


@dataclass
class EnsembleEstimate:
    """Ensemble value along with the pieces that produced it."""

    value: float
    base_values: np.ndarray
    neighbor_ks: tuple[int, ...]
    weight_vector: WeightVector
    n_eval: int
    n_flagged: int


def ensemble_details(
    data: TwoSampleData | DistanceData,
    functional: Functional,
    config: EnsembleConfig | None = None,
    mode: str = "loo",
) -> EnsembleEstimate:
    machinery = prepare_ensemble(data, config, mode)
    value, bases = combine_with_functional(machinery, functional)
    return EnsembleEstimate(
        value,
        bases,
        machinery.neighbor_ks,
        machinery.weight_vector,
        machinery.bundle.n_eval,
        machinery.bundle.n_flagged,
    )


def ensemble_estimate(
    data: TwoSampleData | DistanceData,
    functional: Functional,
    config: EnsembleConfig | None = None,
    mode: str = "loo",
) -> float:
    """Weighted ensemble estimate of the raw functional value.

    Equals the weight vector dotted with the per-k ``base_estimate`` values
    computed from the same profiles.
    """
    return ensemble_details(data, functional, config, mode).value
