"""sklearn-style regressor wrappers around the numpy training loop."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .core import ConvPoolConfig, FfnnConfig
from .train import TrainConfig, train

__all__ = ["FfnnRegressor", "ConvPoolRegressor"]


class _ArtifactRegressor(BaseEstimator, RegressorMixin):
    def _model_config(self, X):
        raise NotImplementedError

    def _train_config(self) -> TrainConfig:
        return TrainConfig(learning_rate=self.learning_rate, batch_size=self.batch_size,
                           max_epochs=self.max_epochs, seed=self.seed, dtype=self.dtype)

    def fit(self, X, y, X_val=None, y_val=None):
        """Fit with Adam; validation defaults to the training split when not
        given (fine for smoke use, but pass a subject-disjoint split for any
        real model selection)."""
        if X_val is None:
            X_val, y_val = X, y
        self.artifact_ = train(self._model_config(X), self._train_config(), X, y, X_val, y_val)
        return self

    def predict(self, X):
        if not hasattr(self, "artifact_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted")
        return self.artifact_.predict(X)


class FfnnRegressor(_ArtifactRegressor):
    """Dense tanh stack over fixed-length functionals vectors."""

    def __init__(self, n_hidden_layers=2, width=200, learning_rate=1e-4,
                 batch_size=64, max_epochs=100, seed=0, dtype="float64"):
        self.n_hidden_layers = n_hidden_layers
        self.width = width
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.seed = seed
        self.dtype = dtype

    def _model_config(self, X):
        return FfnnConfig(n_hidden_layers=self.n_hidden_layers, width=self.width,
                          n_inputs=np.asarray(X[0]).shape[-1])


class ConvPoolRegressor(_ArtifactRegressor):
    """Time convolutions + masked global max pooling over log-MFB sequences."""

    def __init__(self, n_layers=2, channels=200, kernel_len=4, learning_rate=1e-4,
                 batch_size=64, max_epochs=15, seed=0, dtype="float64"):
        self.n_layers = n_layers
        self.channels = channels
        self.kernel_len = kernel_len
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.seed = seed
        self.dtype = dtype

    def _model_config(self, X):
        return ConvPoolConfig(n_layers=self.n_layers, channels=self.channels,
                              kernel_len=self.kernel_len,
                              n_input_channels=np.asarray(X[0]).shape[-1])
