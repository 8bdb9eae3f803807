"""
Neural sequence models (LSTM, TFT-lite) with analytic gradients, pinball
loss, Adam and validation early stopping.
"""

from .base import SequenceModel
from .init import init_weights, orthogonal, xavier_uniform
from .loss import QuantileSpec, median_loss, pinball, pinball_loss_and_grad, quantile_loss
from .lstm import LSTMModel
from .optim import Adam
from .storage import load_checkpoint, save_checkpoint, save_history
from .tft_lite import TFTLiteModel
from .training import (
    EarlyStopping,
    EpochRecord,
    TrainConfig,
    TrainingResult,
    build_model,
    fit_model,
    train_model,
)

__all__ = [
    "SequenceModel",
    "LSTMModel",
    "TFTLiteModel",
    "init_weights",
    "xavier_uniform",
    "orthogonal",
    "QuantileSpec",
    "pinball",
    "quantile_loss",
    "median_loss",
    "pinball_loss_and_grad",
    "Adam",
    "EarlyStopping",
    "EpochRecord",
    "TrainConfig",
    "TrainingResult",
    "build_model",
    "fit_model",
    "train_model",
    "save_checkpoint",
    "load_checkpoint",
    "save_history",
]
