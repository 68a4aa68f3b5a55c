"""Symmetric graph convolutional autoencoder with a stable sharpening decoder."""
from .graph_ops import Graph, build_operator, knn_graph, spectral_radius
from .model import ModelConfig, build_specs, forward, init_params
from .trainer import TrainConfig, finetune, latent, pretrain, train_linkpred

__version__ = "0.1.0"

__all__ = [
    "Graph",
    "ModelConfig",
    "TrainConfig",
    "build_operator",
    "build_specs",
    "finetune",
    "forward",
    "init_params",
    "knn_graph",
    "latent",
    "pretrain",
    "spectral_radius",
    "train_linkpred",
]
