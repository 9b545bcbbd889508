from .core import (
    ConvPoolConfig,
    ConvPoolNet,
    FfnnConfig,
    FfnnNet,
    TooShortInputError,
    batch_mse_loss,
    pad_sequences,
    xavier_uniform,
)
from .adam import AdamState, TrainingDivergedError, adam_step
from .train import ModelArtifact, TrainConfig, load_artifact, save_artifact, train
from .estimators import ConvPoolRegressor, FfnnRegressor

__all__ = [
    "FfnnConfig", "ConvPoolConfig", "FfnnNet", "ConvPoolNet",
    "xavier_uniform", "pad_sequences", "batch_mse_loss", "TooShortInputError",
    "AdamState", "adam_step", "TrainingDivergedError",
    "TrainConfig", "ModelArtifact", "train", "save_artifact", "load_artifact",
    "FfnnRegressor", "ConvPoolRegressor",
]
