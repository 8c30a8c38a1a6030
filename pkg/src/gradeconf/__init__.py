"""Hybrid confidence estimation and selective-grading evaluation toolkit.

Turns raw LLM grading outputs and response embeddings into calibrated
hybrid confidence scores and evaluates them with selective-prediction and
reliability analyses.
"""

from .corpus import (
    RawModelOutputs,
    ResponseRecord,
    SplitAssignment,
    load_corpus,
    stratified_split,
    token_length,
    write_corpus,
)
from .signals import SignalSet, build_signal_set, consistency_confidence, latent_confidence, orient
from .aleatoric import (
    ClusterModel,
    assign_uncertainty,
    choose_k,
    cluster_entropy,
    cluster_label_distribution,
    fit,
    ward_cluster,
)
from .forest import TreeEnsemble, ensemble_score, ensemble_scores, train_ensemble
from .fusion import CalibratedScorer, build_features, calibrate_baseline, calibrate_cv, platt_fit
from .metrics import EvalItem, arc_auarc, evaluate_method, operating_point, reliability, roc_auroc

__version__ = "0.1.0"

__all__ = [
    "ResponseRecord", "RawModelOutputs", "SplitAssignment",
    "load_corpus", "write_corpus", "stratified_split", "token_length",
    "SignalSet", "latent_confidence", "consistency_confidence", "orient", "build_signal_set",
    "ClusterModel", "ward_cluster", "cluster_label_distribution", "cluster_entropy",
    "fit", "assign_uncertainty", "choose_k",
    "TreeEnsemble", "train_ensemble", "ensemble_score", "ensemble_scores",
    "CalibratedScorer", "build_features", "platt_fit", "calibrate_cv", "calibrate_baseline",
    "EvalItem", "roc_auroc", "arc_auarc", "reliability", "operating_point", "evaluate_method",
    "__version__",
]
