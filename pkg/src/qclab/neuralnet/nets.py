"""Default architectures."""

from __future__ import annotations

import numpy as np

from .layers import BatchNorm, Conv2D, Dense, Dropout, MaxPool2, ReLU, Sigmoid, Softmax
from .model import Sequential


def build_cnn(
    input_shape=(1, 36, 36),
    filters=(8, 16),
    kernel: int = 5,
    dense: int = 128,
    dropout: float = 0.5,
    seed: int = 0,
    dtype=np.float32,
) -> Sequential:
    """conv-relu-pool, conv-batchnorm-dropout-relu-pool, dense-relu, softmax(2)."""
    layers = [
        Conv2D(filters[0], kernel),
        ReLU(),
        MaxPool2(),
        Conv2D(filters[1], kernel),
        BatchNorm(),
        Dropout(dropout),
        ReLU(),
        MaxPool2(),
        Dense(dense),
        ReLU(),
        Dense(2),
        Softmax(),
    ]
    return Sequential(layers, input_shape, seed=seed, dtype=dtype)


def build_mlp(n_inputs: int, hidden: int = 700, seed: int = 0, dtype=np.float32) -> Sequential:
    """One sigmoid hidden layer and a two-way softmax."""
    return Sequential([Dense(hidden), Sigmoid(), Dense(2), Softmax()], (n_inputs,), seed=seed, dtype=dtype)
