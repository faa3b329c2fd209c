"""Function-call-graph classification with jumping-knowledge GNNs."""

from .corpus import Corpus, Sample
from .dataio import export_embeddings, load_corpus, load_model, save_model
from .features import build_feature_matrix, fit_standardizer, apply_standardizer
from .gnn import ModelConfig, ModelParams, init_params, model_forward
from .graph import DirectedGraph, batch_graphs, load_edge_list
from .metrics import compute_metrics
from .train import TrainConfig, evaluate, fit, predict

__all__ = [
    "Corpus",
    "DirectedGraph",
    "ModelConfig",
    "ModelParams",
    "Sample",
    "TrainConfig",
    "apply_standardizer",
    "batch_graphs",
    "build_feature_matrix",
    "compute_metrics",
    "evaluate",
    "export_embeddings",
    "fit",
    "fit_standardizer",
    "init_params",
    "load_corpus",
    "load_edge_list",
    "load_model",
    "model_forward",
    "predict",
    "save_model",
]
