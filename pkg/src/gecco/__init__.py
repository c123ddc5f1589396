"""Generalized convex clustering with feature selection for mixed multi-view data."""

from .core import (
    EPS,
    LossSpec,
    MultiViewDataset,
    Penalties,
    View,
    center_matrix,
    expand_multinomial,
    loss_center,
    loss_gradient,
    loss_value,
    null_deviance_weight,
)
from .diffgraph import DifferenceOperator, extract_clusters, selected_features
from .evalsim import (
    adjusted_rand_index,
    f1_selection,
    simulate_halfmoons,
    simulate_multiview,
    simulate_poisson,
    simulate_spherical,
)
from .paths import (
    adaptive_fit,
    gamma_for_k,
    holdout_validate,
    regularization_path,
    within_cluster_deviance,
)
from .solver import (
    DivergenceError,
    Solution,
    SolverError,
    SolverOptions,
    fit,
    fit_fullsolve,
    full_fusion_alpha_bound,
    full_fusion_gamma_bound,
    objective,
)
from .weights import (
    WeightGraph,
    adaptive_feature_weights,
    build_weight_graph,
    knn_kernel_weights,
    pairwise_distance,
    sne_weights,
    weighted_gower_distance,
)

__version__ = "0.1.0"

__all__ = [
    "EPS",
    "LossSpec",
    "MultiViewDataset",
    "Penalties",
    "View",
    "WeightGraph",
    "DifferenceOperator",
    "Solution",
    "SolverOptions",
    "SolverError",
    "DivergenceError",
    "adaptive_feature_weights",
    "adaptive_fit",
    "adjusted_rand_index",
    "build_weight_graph",
    "center_matrix",
    "expand_multinomial",
    "extract_clusters",
    "f1_selection",
    "fit",
    "fit_fullsolve",
    "full_fusion_alpha_bound",
    "full_fusion_gamma_bound",
    "gamma_for_k",
    "holdout_validate",
    "knn_kernel_weights",
    "loss_center",
    "loss_gradient",
    "loss_value",
    "null_deviance_weight",
    "objective",
    "pairwise_distance",
    "regularization_path",
    "selected_features",
    "simulate_halfmoons",
    "simulate_multiview",
    "simulate_poisson",
    "simulate_spherical",
    "sne_weights",
    "weighted_gower_distance",
    "within_cluster_deviance",
]
