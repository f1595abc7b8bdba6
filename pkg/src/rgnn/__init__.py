"""Robust training of graph-filter GNNs under topology perturbations.

Jointly fits the network weights and a denoised graph shift operator by
alternating minimization: classical weight fitting at fixed topology, then
projected proximal updates of the topology at fixed weights (gradient step,
L1 soft-threshold, shifted soft-threshold toward the observed graph,
projection onto the feasible set).
"""

from .data import Dataset, load_webkb, make_splits, normalize_features
from .gso import (
    ConstraintSet,
    Gso,
    gso_distance_l1,
    load_edge_list,
    project_gso,
    save_edge_list,
    sparsity_penalty,
)
from .metrics import accuracy, graph_recovery_error, summarize
from .model import (
    ForwardCache,
    GnnParams,
    LabeledTargets,
    apply_filter,
    backward,
    forward,
    init_params,
    load_params,
    masked_cross_entropy,
    save_params,
)
from .optim import (
    Hyperparams,
    TrainResult,
    denoise_gso_step,
    fit_theta_step,
    objective,
    prox_l1,
    prox_shifted_l1,
    train_robust,
)
from .perturb import PerturbationSpec, apply_perturbation, rewire_edges, subset_rewire

__version__ = "0.1.0"

__all__ = [
    "ConstraintSet", "Gso", "project_gso", "gso_distance_l1", "sparsity_penalty",
    "save_edge_list", "load_edge_list",
    "PerturbationSpec", "rewire_edges", "subset_rewire", "apply_perturbation",
    "GnnParams", "ForwardCache", "LabeledTargets", "init_params", "apply_filter",
    "forward", "masked_cross_entropy", "backward", "save_params", "load_params",
    "Hyperparams", "TrainResult", "prox_l1", "prox_shifted_l1",
    "fit_theta_step", "denoise_gso_step", "train_robust", "objective",
    "Dataset", "load_webkb", "make_splits", "normalize_features",
    "accuracy", "graph_recovery_error", "summarize",
]
