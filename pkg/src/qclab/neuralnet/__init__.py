"""Small numpy neural-network stack: layers with explicit backward passes,
Adam, a classifier training loop, and a two-dimensional VAE."""

from .layers import BatchNorm, Conv2D, Dense, Dropout, Layer, MaxPool2, ReLU, Sigmoid, Softmax
from .model import Sequential, cross_entropy, load_model, save_model
from .nets import build_cnn, build_mlp
from .optim import AdamState, adam_step
from .train import Hyper, TrainResult, accuracy, train_classifier
from .vae import VAE, VaeLoss, bce_term, kl_term, reparameterize, vae_loss

__all__ = [
    "AdamState",
    "BatchNorm",
    "Conv2D",
    "Dense",
    "Dropout",
    "Hyper",
    "Layer",
    "MaxPool2",
    "ReLU",
    "Sequential",
    "Sigmoid",
    "Softmax",
    "TrainResult",
    "VAE",
    "VaeLoss",
    "accuracy",
    "adam_step",
    "bce_term",
    "build_cnn",
    "build_mlp",
    "cross_entropy",
    "kl_term",
    "load_model",
    "reparameterize",
    "save_model",
    "train_classifier",
    "vae_loss",
]
