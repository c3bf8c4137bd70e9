"""From-scratch convolutional classifier: layers, training, model files."""

from .model import (
    ArchConfig,
    CnnModel,
    ConvLayer,
    DenseLayer,
    PoolLayer,
    conv_forward,
    forward,
    init_model,
    loss_and_gradients,
    maxpool_forward,
    predict,
    predict_proba,
    softmax,
)
from .serialize import load_model, save_model
from .train import EpochStats, LearningCurve, TrainConfig, evaluate, stratified_holdout, train

__all__ = [
    "ArchConfig",
    "CnnModel",
    "ConvLayer",
    "DenseLayer",
    "PoolLayer",
    "conv_forward",
    "forward",
    "init_model",
    "loss_and_gradients",
    "maxpool_forward",
    "predict",
    "predict_proba",
    "softmax",
    "load_model",
    "save_model",
    "EpochStats",
    "LearningCurve",
    "TrainConfig",
    "evaluate",
    "stratified_holdout",
    "train",
]
