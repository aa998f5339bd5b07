"""Scikit-learn style estimators over the divergence and bound machinery.

All three estimators accept ``fit(X, y)`` with a two-class label vector and
either feature coordinates (``metric="euclidean"``) or a precomputed square
distance matrix (``metric="precomputed"``). Results land in trailing
underscore attributes; parameters round-trip through ``get_params`` so the
estimators clone and grid-search like any other sklearn object.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .bounds import BoundsConfig, estimate_all_bounds
from .data import distance_data_from_arrays, two_sample_from_labels
from .ensemble import EnsembleConfig, ensemble_details
from .functionals import (
    ChernoffCoefficient,
    HpDivergenceRational,
    HpDivergenceVariational,
    SoftminLowerBound,
    bound_from_dphi,
)
from .mst import mst_statistics

__all__ = ["KnnEnsembleDivergence", "MstDivergence", "BayesErrorBounds"]


def _build_dataset(X, y, metric, intrinsic_dim, prior1):
    if metric == "euclidean":
        data, classes = two_sample_from_labels(X, y, prior1)
    elif metric == "precomputed":
        data, classes = distance_data_from_arrays(X, y, intrinsic_dim)
    else:
        raise ValueError(f"metric must be 'euclidean' or 'precomputed', got {metric!r}")
    return data, classes


def _functional_from_key(key: str, alpha: float, prior1: float):
    if key == "chernoff":
        return ChernoffCoefficient(alpha)
    if key == "hp-rational":
        return HpDivergenceRational(prior1)
    if key == "hp-variational":
        return HpDivergenceVariational(prior1)
    if key == "softmin":
        return SoftminLowerBound(alpha, prior1)
    raise ValueError(
        f"unknown functional {key!r}; expected 'chernoff', 'hp-rational', "
        "'hp-variational', or 'softmin'"
    )


class KnnEnsembleDivergence(BaseEstimator):
    """Weighted k-NN ensemble estimate of one divergence functional.

    Parameters
    ----------
    functional : str
        "hp-rational" (default), "hp-variational", "chernoff", or "softmin".
    alpha : float
        Exponent for "chernoff" (in (0, 1)) or sharpness for "softmin".
    prior1 : float or None
        Class-1 prior; empirical fraction when None.
    k_scales : tuple of float or None
        Neighbor-scale grid; evenly spaced default when None.
    weight_mode : str
        "exact-null" or "relaxed".
    eval_mode : str
        "loo" or "split".
    metric : str
        "euclidean" or "precomputed".
    intrinsic_dim : int or None
        Dimension used for volume normalization with precomputed distances.
    """

    def __init__(
        self,
        functional: str = "hp-rational",
        alpha: float = 0.5,
        prior1: float | None = None,
        k_scales: tuple | None = None,
        weight_mode: str = "exact-null",
        norm_budget: float | None = None,
        eval_mode: str = "loo",
        metric: str = "euclidean",
        intrinsic_dim: int | None = None,
    ):
        self.functional = functional
        self.alpha = alpha
        self.prior1 = prior1
        self.k_scales = k_scales
        self.weight_mode = weight_mode
        self.norm_budget = norm_budget
        self.eval_mode = eval_mode
        self.metric = metric
        self.intrinsic_dim = intrinsic_dim

    def fit(self, X, y):
        data, classes = _build_dataset(X, y, self.metric, self.intrinsic_dim, self.prior1)
        self.classes_ = np.asarray(classes)
        self.prior1_ = data.prior1
        spec = _functional_from_key(self.functional, self.alpha, self.prior1_)
        config = None
        if self.k_scales is not None:
            config = EnsembleConfig(tuple(self.k_scales), self.weight_mode, self.norm_budget)
        elif self.weight_mode != "exact-null" or self.norm_budget is not None:
            from .ensemble import default_k_scales

            dim = data.dim if self.metric == "euclidean" else self.intrinsic_dim
            config = EnsembleConfig(default_k_scales(dim), self.weight_mode, self.norm_budget)
        details = ensemble_details(data, spec, config, self.eval_mode)
        self.dphi_ = details.value
        self.estimate_ = bound_from_dphi(spec, details.value)
        self.base_estimates_ = details.base_values
        self.neighbor_ks_ = details.neighbor_ks
        self.weights_ = details.weight_vector.weights
        self.weight_residuals_ = details.weight_vector.residuals
        self.n_eval_ = details.n_eval
        self.n_flagged_ = details.n_flagged
        if self.metric == "euclidean":
            self.n_features_in_ = np.asarray(X).shape[1]
        return self


class MstDivergence(BaseEstimator):
    """Divergence estimate from cross-class edges of the pooled-sample MST."""

    def __init__(self, normalization: str = "harmonic", metric: str = "euclidean"):
        self.normalization = normalization
        self.metric = metric

    def fit(self, X, y):
        data, classes = _build_dataset(X, y, self.metric, None, None)
        self.classes_ = np.asarray(classes)
        stats = mst_statistics(data, self.normalization)
        self.estimate_ = stats.value
        self.raw_estimate_ = stats.raw
        self.clamped_ = stats.clamped
        self.cross_count_ = stats.result.cross_count
        self.total_weight_ = stats.result.total_weight
        self.n_edges_ = len(stats.result.edges)
        if self.metric == "euclidean":
            self.n_features_in_ = np.asarray(X).shape[1]
        return self


class BayesErrorBounds(BaseEstimator):
    """Upper and lower bounds on the Bayes error of the labeled sample.

    ``fit`` populates ``report_`` (a :class:`berbounds.bounds.BoundsReport`)
    with the bounds named in ``bounds``, optionally with stratified bootstrap
    confidence intervals.
    """

    def __init__(
        self,
        bounds: tuple = ("chernoff", "hp-knn", "hp-mst", "softmin"),
        k_scales: tuple | None = None,
        weight_mode: str = "exact-null",
        norm_budget: float | None = None,
        eval_mode: str = "loo",
        chernoff_grid: tuple | None = None,
        softmin_alpha: float = 500.0,
        prior1: float | None = None,
        hp_form: str = "rational",
        mst_normalization: str = "harmonic",
        n_bootstrap: int = 0,
        ci_level: float = 0.95,
        bootstrap_estimators: tuple = ("knn-ensemble",),
        random_state: int = 0,
        metric: str = "euclidean",
        intrinsic_dim: int | None = None,
    ):
        self.bounds = bounds
        self.k_scales = k_scales
        self.weight_mode = weight_mode
        self.norm_budget = norm_budget
        self.eval_mode = eval_mode
        self.chernoff_grid = chernoff_grid
        self.softmin_alpha = softmin_alpha
        self.prior1 = prior1
        self.hp_form = hp_form
        self.mst_normalization = mst_normalization
        self.n_bootstrap = n_bootstrap
        self.ci_level = ci_level
        self.bootstrap_estimators = bootstrap_estimators
        self.random_state = random_state
        self.metric = metric
        self.intrinsic_dim = intrinsic_dim

    def fit(self, X, y):
        data, classes = _build_dataset(X, y, self.metric, self.intrinsic_dim, self.prior1)
        self.classes_ = np.asarray(classes)
        ensemble = None
        if self.k_scales is not None:
            ensemble = EnsembleConfig(tuple(self.k_scales), self.weight_mode, self.norm_budget)
        config = BoundsConfig(
            bounds=tuple(self.bounds),
            ensemble=ensemble,
            eval_mode=self.eval_mode,
            prior1=self.prior1,
            chernoff_grid=tuple(self.chernoff_grid) if self.chernoff_grid else None,
            softmin_alpha=self.softmin_alpha,
            hp_form=self.hp_form,
            mst_normalization=self.mst_normalization,
            n_bootstrap=self.n_bootstrap,
            ci_level=self.ci_level,
            bootstrap_estimators=tuple(self.bootstrap_estimators),
            seed=self.random_state,
        )
        self.report_ = estimate_all_bounds(data, config)
        self.prior1_ = self.report_.prior1
        if self.metric == "euclidean":
            self.n_features_in_ = np.asarray(X).shape[1]
        return self

    def bound_value(self, bound_name: str, estimator: str | None = None) -> float:
        """Point estimate of one bound from the fitted report."""
        if not hasattr(self, "report_"):
            raise NotFittedError("call fit before reading results")
        entry = self.report_.entry(bound_name, estimator)
        if entry.error is not None:
            raise ValueError(f"bound {bound_name!r} failed: {entry.error}")
        return entry.estimate
