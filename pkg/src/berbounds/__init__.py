"""Bayes error rate bounds from f-divergence estimates on labeled samples.

The package estimates divergence functionals between two class-conditional
distributions with a weighted ensemble of k-nearest-neighbor density-ratio
plug-ins, or with the cross-class edge count of the pooled minimum spanning
tree, and maps the estimates into upper and lower bounds on the Bayes
classification error. It works from feature coordinates or from a precomputed
distance matrix, supports stratified bootstrap confidence intervals, and
ships a CLI for Gaussian validation sweeps and distance-blend studies.
"""
from .bounds import (
    ALL_BOUNDS,
    BoundEstimate,
    BoundsConfig,
    BoundsReport,
    bootstrap_ci,
    chernoff_upper_bound,
    estimate_all_bounds,
    hp_sandwich_bounds,
    knn_hp_divergence,
    resample_within_classes,
    softmin_lower_bound,
)
from .cli import blend_distances, run_blend_sweep, run_gaussian_sweep, synthetic_blend_fixture
from .data import (
    DistanceData,
    GaussianSpec,
    TwoSampleData,
    derive_seed,
    distance_data_from_arrays,
    load_distance_matrix,
    load_labeled_csv,
    pairwise_distances,
    sample_gaussian_pair,
    true_gaussian_ber,
    two_sample_from_labels,
)
from .ensemble import (
    EnsembleConfig,
    EnsembleEstimate,
    WeightVector,
    base_estimate,
    default_k_scales,
    ensemble_details,
    ensemble_estimate,
    neighbor_counts,
    solve_weights,
)
from .estimators import BayesErrorBounds, KnnEnsembleDivergence, MstDivergence
from .functionals import (
    ChernoffCoefficient,
    HpDivergenceRational,
    HpDivergenceVariational,
    SoftminLowerBound,
    bound_from_dphi,
    phi_eval,
)
from .mst import MstResult, MstStatistics, hp_divergence_from_mst, minimum_spanning_tree, mst_from_points, mst_statistics
from .neighbors import (
    DensityPair,
    NeighborIndex,
    ProfileBundle,
    build_profiles,
    density_profiles,
    knn_density,
    unit_ball_volume,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ALL_BOUNDS",
    "BayesErrorBounds",
    "BoundEstimate",
    "BoundsConfig",
    "BoundsReport",
    "ChernoffCoefficient",
    "DensityPair",
    "DistanceData",
    "EnsembleConfig",
    "EnsembleEstimate",
    "GaussianSpec",
    "HpDivergenceRational",
    "HpDivergenceVariational",
    "KnnEnsembleDivergence",
    "MstDivergence",
    "MstResult",
    "MstStatistics",
    "NeighborIndex",
    "ProfileBundle",
    "SoftminLowerBound",
    "TwoSampleData",
    "WeightVector",
    "base_estimate",
    "blend_distances",
    "bootstrap_ci",
    "bound_from_dphi",
    "build_profiles",
    "chernoff_upper_bound",
    "default_k_scales",
    "density_profiles",
    "derive_seed",
    "distance_data_from_arrays",
    "ensemble_details",
    "ensemble_estimate",
    "estimate_all_bounds",
    "hp_divergence_from_mst",
    "hp_sandwich_bounds",
    "knn_density",
    "knn_hp_divergence",
    "load_distance_matrix",
    "load_labeled_csv",
    "minimum_spanning_tree",
    "mst_from_points",
    "mst_statistics",
    "neighbor_counts",
    "pairwise_distances",
    "phi_eval",
    "resample_within_classes",
    "run_blend_sweep",
    "run_gaussian_sweep",
    "sample_gaussian_pair",
    "softmin_lower_bound",
    "solve_weights",
    "synthetic_blend_fixture",
    "true_gaussian_ber",
    "two_sample_from_labels",
    "unit_ball_volume",
]
