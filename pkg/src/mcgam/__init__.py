"""Multiclass generalized additive models: cyclic-boosting training and
canonical post-processing of shape functions."""

from ._kernels import BACKEND
from .api import AxiomReport, ConsistencyError, apply, solve_edge, verify_axioms
from .boosting import TrainConfig, train
from .data import BinSpec, Dataset, Feature, FeatureSchema, build_bins, load_csv, split
from .evaluation import balanced_accuracy, evaluate
from .gam import AdditiveModel, add_offsets, cross_entropy, from_linear, logits, predict_proba, rebase_to_class

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "AdditiveModel", "AxiomReport", "BinSpec", "ConsistencyError", "Dataset", "Feature",
    "FeatureSchema", "TrainConfig", "add_offsets", "apply", "balanced_accuracy", "build_bins",
    "cross_entropy", "evaluate", "from_linear", "load_csv", "logits", "predict_proba",
    "rebase_to_class", "solve_edge", "split", "train", "verify_axioms",
]
