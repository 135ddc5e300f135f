"""From-scratch network engine: layers, specs, training and checkpoints."""

from .layers import Conv2d, Conv3d, Dense, Flatten, Relu, Sigmoid
from .network import ModelSpec, Network, detector_spec, load_model, save_model, walk_shapes
from .training import (
    Adam,
    EpochStats,
    Metrics,
    TrainConfig,
    bce_loss,
    evaluate,
    gradient_check,
    train,
)

__all__ = [
    "Adam",
    "Conv2d",
    "Conv3d",
    "Dense",
    "EpochStats",
    "Flatten",
    "Metrics",
    "ModelSpec",
    "Network",
    "Relu",
    "Sigmoid",
    "TrainConfig",
    "bce_loss",
    "detector_spec",
    "evaluate",
    "gradient_check",
    "load_model",
    "save_model",
    "train",
    "walk_shapes",
]
