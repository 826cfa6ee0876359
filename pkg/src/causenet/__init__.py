"""Feed-forward networks with causal graph injection, structure extraction
and an expert contestation loop."""

from .data import Dataset, SyntheticSpec, generate_synthetic, kfold_splits, load_csv, sample_known_edges, standardize
from .discovery import (
    ContestSession,
    ExtractionConfig,
    Revision,
    contest_graph,
    contest_step,
    extract_dag,
    open_session,
    threshold_sweep,
)
from .graphs import CausalGraph, PartialGraph, complete_partial_graph, is_acyclic, mask_from_full, mask_from_partial
from .losses import LossReport, LossWeights, acyclicity_penalty, l1_penalty, prediction_loss, reconstruction_loss, total_loss
from .metrics import MetricReport, TTestResult, auc, evaluate_fold, mse, reconstruction_accuracy, two_sample_ttest
from .network import JointNetwork, apply_mask, compute_adjacency, forward, init_network, load_checkpoint, save_checkpoint
from .training import TrainConfig, TrainResult, inject_graph, train_unconstrained

__all__ = [
    "CausalGraph",
    "ContestSession",
    "Dataset",
    "ExtractionConfig",
    "JointNetwork",
    "LossReport",
    "LossWeights",
    "MetricReport",
    "PartialGraph",
    "Revision",
    "SyntheticSpec",
    "TTestResult",
    "TrainConfig",
    "TrainResult",
    "acyclicity_penalty",
    "apply_mask",
    "auc",
    "complete_partial_graph",
    "compute_adjacency",
    "contest_graph",
    "contest_step",
    "evaluate_fold",
    "extract_dag",
    "forward",
    "generate_synthetic",
    "init_network",
    "inject_graph",
    "is_acyclic",
    "kfold_splits",
    "l1_penalty",
    "load_checkpoint",
    "load_csv",
    "mask_from_full",
    "mask_from_partial",
    "mse",
    "open_session",
    "prediction_loss",
    "reconstruction_accuracy",
    "reconstruction_loss",
    "sample_known_edges",
    "save_checkpoint",
    "standardize",
    "threshold_sweep",
    "total_loss",
    "train_unconstrained",
    "two_sample_ttest",
]
