"""Bayes-error bound assembly.

Chernoff upper bound minimized over an alpha grid, the sandwich bounds
0.5 - 0.5*sqrt(D) <= error <= 0.5 - 0.5*D around the rational divergence, the
soft-min lower bound, stratified percentile bootstrap intervals, and a report
container that serializes to JSON.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .data import DistanceData, TwoSampleData, derive_seed
from .ensemble import (
    EnsembleConfig,
    combine_with_functional,
    prepare_ensemble,
)
from .functionals import (
    HpDivergenceRational,
    HpDivergenceVariational,
    SoftminLowerBound,
    bound_from_dphi,
)
from .mst import mst_statistics

__all__ = [
    "DEFAULT_CHERNOFF_GRID",
    "chernoff_upper_bound",
    "hp_sandwich_bounds",
    "softmin_lower_bound",
    "knn_hp_divergence",
    "bootstrap_ci",
    "resample_within_classes",
    "BoundsConfig",
    "BoundEstimate",
    "BoundsReport",
    "estimate_all_bounds",
]

DEFAULT_CHERNOFF_GRID = tuple(i / 100.0 for i in range(1, 100))
KNN_BOUNDS = ("chernoff", "hp-knn", "softmin")
ALL_BOUNDS = ("chernoff", "hp-knn", "hp-mst", "softmin")


def _clamp_probability(value: float) -> tuple[float, bool]:
    clamped = min(max(value, 0.0), 0.5)
    return clamped, clamped != value


def _resolve_prior(data, prior1: float | None) -> float:
    if prior1 is None:
        return data.prior1
    if not 0.0 < prior1 < 1.0:
        raise ValueError(f"prior1 must lie in (0, 1), got {prior1}")
    return float(prior1)


def chernoff_upper_bound(
    data: TwoSampleData | DistanceData,
    prior1: float | None = None,
    alpha_grid=None,
    config: EnsembleConfig | None = None,
    mode: str = "loo",
) -> tuple[float, float]:
    """Tightest Chernoff bound over the alpha grid.

    Each alpha gives q1^a q2^(1-a) times the ensemble estimate of the
    coefficient integral f1^a f2^(1-a); one set of density profiles serves the
    whole grid since only phi changes. Returns (bound, minimizing alpha), the
    bound clamped to [0, 0.5].
    """
    grid = DEFAULT_CHERNOFF_GRID if alpha_grid is None else tuple(alpha_grid)
    if not grid:
        raise ValueError("alpha grid is empty")
    if any(not 0.0 < a < 1.0 for a in grid):
        raise ValueError("alpha grid values must lie in (0, 1)")
    q1 = _resolve_prior(data, prior1)
    q2 = 1.0 - q1
    machinery = prepare_ensemble(data, config, mode)
    w = machinery.weight_vector.weights
    ratios = [machinery.bundle.ratios[k] for k in machinery.neighbor_ks]
    best_bound = math.inf
    best_alpha = grid[0]
    for a in grid:
        coeff = float(w @ [np.mean(t**a) for t in ratios])
        bound = q1**a * q2 ** (1.0 - a) * coeff
        if bound < best_bound:
            best_bound, best_alpha = bound, a
    clamped, _ = _clamp_probability(best_bound)
    return clamped, best_alpha


def hp_sandwich_bounds(divergence: float) -> tuple[float, float]:
    """(0.5 - 0.5*sqrt(D), 0.5 - 0.5*D) with D first clamped to [0, 1]."""
    if not np.isfinite(divergence):
        raise ValueError(f"non-finite divergence {divergence}")
    d = min(max(float(divergence), 0.0), 1.0)
    return 0.5 - 0.5 * math.sqrt(d), 0.5 - 0.5 * d


def knn_hp_divergence(
    data: TwoSampleData | DistanceData,
    prior1: float | None = None,
    config: EnsembleConfig | None = None,
    mode: str = "loo",
    form: str = "rational",
) -> float:
    """Ensemble divergence estimate on the bound scale, before clamping."""
    q1 = _resolve_prior(data, prior1)
    if form == "rational":
        functional = HpDivergenceRational(q1)
    elif form == "variational":
        functional = HpDivergenceVariational(q1)
    else:
        raise ValueError(f"unknown divergence form {form!r}")
    machinery = prepare_ensemble(data, config, mode)
    dphi, _ = combine_with_functional(machinery, functional)
    return bound_from_dphi(functional, dphi)


def softmin_lower_bound(
    data: TwoSampleData | DistanceData,
    prior1: float | None = None,
    alpha: float = 500.0,
    config: EnsembleConfig | None = None,
    mode: str = "loo",
) -> float:
    """Soft-min posterior lower bound on the Bayes error, clamped to [0, 0.5]."""
    q1 = _resolve_prior(data, prior1)
    functional = SoftminLowerBound(alpha, q1)
    machinery = prepare_ensemble(data, config, mode)
    dphi, _ = combine_with_functional(machinery, functional)
    value, _ = _clamp_probability(bound_from_dphi(functional, dphi))
    return value


def resample_within_classes(
    data: TwoSampleData | DistanceData, rng: np.random.Generator
):
    """One stratified bootstrap replicate: resample each class with replacement."""
    if isinstance(data, TwoSampleData):
        i1 = rng.integers(0, data.n1, data.n1)
        i2 = rng.integers(0, data.n2, data.n2)
        return TwoSampleData(data.points_f1[i1], data.points_f2[i2], data.prior1)
    c1 = data.class_indices(1)
    c2 = data.class_indices(2)
    sel = np.concatenate([c1[rng.integers(0, c1.size, c1.size)],
                          c2[rng.integers(0, c2.size, c2.size)]])
    sub = data.distances[np.ix_(sel, sel)].copy()
    np.fill_diagonal(sub, 0.0)
    return DistanceData(sub, data.labels[sel], data.intrinsic_dim)


def bootstrap_ci(
    estimator: Callable,
    data: TwoSampleData | DistanceData,
    n_replicates: int = 500,
    level: float = 0.95,
    seed: int | None = None,
) -> tuple[float, float]:
    """Percentile bootstrap interval for ``estimator(data)``.

    Replicates resample within each class. The interval endpoints are the
    order statistics at indices floor((1-level)/2 * B) and
    ceil((1+level)/2 * B) - 1 of the sorted replicate values. Failing
    replicates are dropped with a warning; more than 10% failures is an error.
    """
    if n_replicates < 2:
        raise ValueError(f"n_replicates must be >= 2, got {n_replicates}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    rng = np.random.default_rng(seed)
    values: list[float] = []
    failures = 0
    for _ in range(n_replicates):
        replicate = resample_within_classes(data, rng)
        try:
            values.append(float(estimator(replicate)))
        except Exception as exc:  # noqa: BLE001 - replicate quality varies
            failures += 1
            warnings.warn(f"bootstrap replicate failed: {exc}", stacklevel=2)
    if failures > 0.1 * n_replicates:
        raise RuntimeError(
            f"{failures} of {n_replicates} bootstrap replicates failed"
        )
    values.sort()
    count = len(values)
    lo = int(math.floor((1.0 - level) / 2.0 * count))
    hi = min(count - 1, int(math.ceil((1.0 + level) / 2.0 * count)) - 1)
    return values[lo], values[hi]


@dataclass(frozen=True)
class BoundsConfig:
    """Selection and settings for :func:`estimate_all_bounds`.

    ``bounds`` keys: "chernoff", "hp-knn", "hp-mst", "softmin". Bootstrap CIs
    are computed when ``n_bootstrap`` > 0 for the estimators named in
    ``bootstrap_estimators`` ("knn-ensemble" and/or "mst").
    """

    bounds: tuple[str, ...] = ALL_BOUNDS
    ensemble: EnsembleConfig | None = None
    eval_mode: str = "loo"
    prior1: float | None = None
    chernoff_grid: tuple[float, ...] | None = None
    softmin_alpha: float = 500.0
    hp_form: str = "rational"
    mst_normalization: str = "harmonic"
    n_bootstrap: int = 0
    ci_level: float = 0.95
    bootstrap_estimators: tuple[str, ...] = ("knn-ensemble",)
    seed: int = 0


@dataclass
class BoundEstimate:
    """One bound entry of a report; ``error`` is set when estimation failed."""

    bound_name: str
    estimator: str
    estimate: float | None
    ci: tuple[float, float] | None = None
    level: float | None = None
    alpha_star: float | None = None
    clamped: bool = False
    diagnostics: dict = field(default_factory=dict)
    error: str | None = None

    def to_dict(self) -> dict:
        out = {
            "bound_name": self.bound_name,
            "estimator": self.estimator,
            "estimate": self.estimate,
            "ci": list(self.ci) if self.ci is not None else None,
            "level": self.level,
            "clamped": self.clamped,
            "diagnostics": self.diagnostics,
        }
        if self.alpha_star is not None:
            out["alpha_star"] = self.alpha_star
        if self.error is not None:
            out["error"] = self.error
        return out


@dataclass
class BoundsReport:
    """All requested bounds for one dataset."""

    entries: list[BoundEstimate]
    prior1: float
    diagnostics: dict = field(default_factory=dict)

    def entry(self, bound_name: str, estimator: str | None = None) -> BoundEstimate:
        for e in self.entries:
            if e.bound_name == bound_name and (estimator is None or e.estimator == estimator):
                return e
        raise KeyError(f"no entry {bound_name!r} (estimator={estimator!r})")

    def to_dict(self) -> dict:
        return {
            "prior1": self.prior1,
            "bounds": [e.to_dict() for e in self.entries],
            "diagnostics": self.diagnostics,
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _sandwich_entries(
    divergence_raw: float, estimator: str, diagnostics: dict
) -> list[BoundEstimate]:
    lower, upper = hp_sandwich_bounds(divergence_raw)
    clamped = not 0.0 <= divergence_raw <= 1.0
    diag = dict(diagnostics)
    diag["divergence_raw"] = divergence_raw
    diag["divergence"] = min(max(divergence_raw, 0.0), 1.0)
    return [
        BoundEstimate("hp_lower", estimator, lower, clamped=clamped, diagnostics=diag),
        BoundEstimate("hp_upper", estimator, upper, clamped=clamped, diagnostics=dict(diag)),
    ]


def estimate_all_bounds(
    data: TwoSampleData | DistanceData, config: BoundsConfig | None = None
) -> BoundsReport:
    """Estimate every requested bound, recording per-bound failures.

    k-NN ensemble bounds need feature coordinates or an ``intrinsic_dim`` on
    distance data; requests that cannot be honored produce entries with an
    ``error`` record rather than silently disappearing.
    """
    config = config or BoundsConfig()
    if not config.bounds:
        raise ValueError("no bounds requested")
    unknown = [b for b in config.bounds if b not in ALL_BOUNDS]
    if unknown:
        raise ValueError(f"unknown bound keys {unknown!r}; valid: {ALL_BOUNDS}")
    q1 = _resolve_prior(data, config.prior1)
    entries: list[BoundEstimate] = []
    report_diag: dict = {}

    knn_requested = [b for b in config.bounds if b in KNN_BOUNDS]
    machinery = None
    if knn_requested:
        try:
            machinery = prepare_ensemble(data, config.ensemble, config.eval_mode)
            report_diag["ensemble"] = {
                "neighbor_ks": list(machinery.neighbor_ks),
                "weights": machinery.weight_vector.weights.tolist(),
                "residuals": machinery.weight_vector.residuals.tolist(),
                "weight_norm": machinery.weight_vector.norm,
                "weight_mode": machinery.weight_vector.mode,
                "n_eval": machinery.bundle.n_eval,
                "n_flagged": machinery.bundle.n_flagged,
            }
        except Exception as exc:  # noqa: BLE001 - recorded per bound below
            machinery = exc

    for key in config.bounds:
        if key == "hp-mst":
            try:
                stats = mst_statistics(data, config.mst_normalization)
                diag = {
                    "cross_count": stats.result.cross_count,
                    "total_weight": stats.result.total_weight,
                    "normalization": config.mst_normalization,
                }
                entries.extend(_sandwich_entries(stats.raw, "mst", diag))
            except Exception as exc:  # noqa: BLE001
                entries.append(
                    BoundEstimate("hp_lower", "mst", None, error=str(exc))
                )
                entries.append(
                    BoundEstimate("hp_upper", "mst", None, error=str(exc))
                )
            continue
        if isinstance(machinery, Exception):
            name = {"chernoff": "chernoff_upper", "softmin": "softmin_lower"}.get(key)
            if key == "hp-knn":
                entries.append(BoundEstimate("hp_lower", "knn-ensemble", None, error=str(machinery)))
                entries.append(BoundEstimate("hp_upper", "knn-ensemble", None, error=str(machinery)))
            else:
                entries.append(BoundEstimate(name, "knn-ensemble", None, error=str(machinery)))
            continue
        try:
            if key == "chernoff":
                grid = config.chernoff_grid or DEFAULT_CHERNOFF_GRID
                w = machinery.weight_vector.weights
                ratios = [machinery.bundle.ratios[k] for k in machinery.neighbor_ks]
                best_bound, best_alpha = math.inf, grid[0]
                for a in grid:
                    if not 0.0 < a < 1.0:
                        raise ValueError("alpha grid values must lie in (0, 1)")
                    coeff = float(w @ [np.mean(t**a) for t in ratios])
                    val = q1**a * (1.0 - q1) ** (1.0 - a) * coeff
                    if val < best_bound:
                        best_bound, best_alpha = val, a
                value, was_clamped = _clamp_probability(best_bound)
                entries.append(
                    BoundEstimate(
                        "chernoff_upper",
                        "knn-ensemble",
                        value,
                        alpha_star=best_alpha,
                        clamped=was_clamped,
                        diagnostics={"bound_raw": best_bound},
                    )
                )
            elif key == "hp-knn":
                if config.hp_form == "rational":
                    functional = HpDivergenceRational(q1)
                elif config.hp_form == "variational":
                    functional = HpDivergenceVariational(q1)
                else:
                    raise ValueError(f"unknown divergence form {config.hp_form!r}")
                dphi, _ = combine_with_functional(machinery, functional)
                raw = bound_from_dphi(functional, dphi)
                entries.extend(
                    _sandwich_entries(raw, "knn-ensemble", {"form": config.hp_form})
                )
            elif key == "softmin":
                functional = SoftminLowerBound(config.softmin_alpha, q1)
                dphi, _ = combine_with_functional(machinery, functional)
                raw = bound_from_dphi(functional, dphi)
                value, was_clamped = _clamp_probability(raw)
                entries.append(
                    BoundEstimate(
                        "softmin_lower",
                        "knn-ensemble",
                        value,
                        clamped=was_clamped,
                        diagnostics={
                            "alpha": config.softmin_alpha,
                            "bound_raw": raw,
                        },
                    )
                )
        except Exception as exc:  # noqa: BLE001
            if key == "hp-knn":
                entries.append(BoundEstimate("hp_lower", "knn-ensemble", None, error=str(exc)))
                entries.append(BoundEstimate("hp_upper", "knn-ensemble", None, error=str(exc)))
            else:
                name = {"chernoff": "chernoff_upper", "softmin": "softmin_lower"}[key]
                entries.append(BoundEstimate(name, "knn-ensemble", None, error=str(exc)))

    if config.n_bootstrap > 0:
        _attach_bootstrap_cis(data, config, q1, entries)
    return BoundsReport(entries, q1, report_diag)


def _attach_bootstrap_cis(data, config: BoundsConfig, q1: float, entries) -> None:
    """Percentile CIs per bound; sandwich pairs share one divergence bootstrap."""
    ordinal = 0
    for key in config.bounds:
        estimator_name = "mst" if key == "hp-mst" else "knn-ensemble"
        seed = derive_seed(config.seed, ordinal)
        ordinal += 1
        if estimator_name not in config.bootstrap_estimators:
            continue
        targets = [e for e in entries if e.error is None]
        try:
            if key == "chernoff":
                entry = next(e for e in targets if e.bound_name == "chernoff_upper")
                lo, hi = bootstrap_ci(
                    lambda d: chernoff_upper_bound(
                        d, q1, config.chernoff_grid, config.ensemble, config.eval_mode
                    )[0],
                    data,
                    config.n_bootstrap,
                    config.ci_level,
                    seed,
                )
                entry.ci, entry.level = (lo, hi), config.ci_level
            elif key == "softmin":
                entry = next(e for e in targets if e.bound_name == "softmin_lower")
                lo, hi = bootstrap_ci(
                    lambda d: softmin_lower_bound(
                        d, q1, config.softmin_alpha, config.ensemble, config.eval_mode
                    ),
                    data,
                    config.n_bootstrap,
                    config.ci_level,
                    seed,
                )
                entry.ci, entry.level = (lo, hi), config.ci_level
            elif key in ("hp-knn", "hp-mst"):
                pair = [e for e in targets if e.estimator == estimator_name
                        and e.bound_name in ("hp_lower", "hp_upper")]
                if len(pair) != 2:
                    continue
                if key == "hp-knn":
                    def div_est(d):
                        return knn_hp_divergence(
                            d, q1, config.ensemble, config.eval_mode, config.hp_form
                        )
                else:
                    def div_est(d):
                        return mst_statistics(d, config.mst_normalization).value
                d_lo, d_hi = bootstrap_ci(
                    div_est, data, config.n_bootstrap, config.ci_level, seed
                )
                # Both sandwich maps are decreasing in the divergence, so the
                # interval endpoints swap.
                for e in pair:
                    if e.bound_name == "hp_lower":
                        e.ci = (hp_sandwich_bounds(d_hi)[0], hp_sandwich_bounds(d_lo)[0])
                    else:
                        e.ci = (hp_sandwich_bounds(d_hi)[1], hp_sandwich_bounds(d_lo)[1])
                    e.level = config.ci_level
        except (RuntimeError, StopIteration) as exc:
            for e in entries:
                if e.estimator == estimator_name and e.error is None and e.ci is None:
                    e.diagnostics["bootstrap_error"] = str(exc)
