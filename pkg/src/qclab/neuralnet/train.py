"""Minibatch training loop for softmax classifiers."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainingDivergedError, ValidationError
from ..rng import RngStream
from .model import Sequential
from .optim import AdamState, adam_step

log = logging.getLogger(__name__)


@dataclass
class Hyper:
    epochs: int = 50
    batch_size: int = 60
    lr: float = 5e-4
    seed: int = 0

    def to_dict(self) -> dict:
        return {"epochs": self.epochs, "batch_size": self.batch_size, "lr": self.lr, "seed": self.seed}


@dataclass
class TrainResult:
    model: Sequential
    history: list = field(default_factory=list)

    @property
    def test_accuracy(self) -> float:
        return self.history[-1]["test_acc"] if self.history else float("nan")


def accuracy(model: Sequential, x, y, batch_size: int = 256) -> float:
    if len(y) == 0:
        return float("nan")
    p = model.predict_proba(x, batch_size)
    return float(np.mean(p.argmax(axis=1) == np.asarray(y)))


def train_classifier(
    model: Sequential,
    x_train,
    y_train,
    x_test=None,
    y_test=None,
    hyper: Hyper | None = None,
) -> TrainResult:
    """Adam on cross-entropy; history rows hold epoch, mean loss, running
    train accuracy (train mode) and test accuracy (eval mode)."""
    hyper = hyper or Hyper()
    x_train = np.asarray(x_train, dtype=model.dtype)
    y_train = np.asarray(y_train, dtype=np.int64)
    if len(x_train) != len(y_train) or len(y_train) == 0:
        raise ValidationError("training inputs and labels must be non-empty and of equal length")
    if y_train.min() < 0 or y_train.max() >= model.output_shape[0]:
        raise ValidationError("labels out of range for the output layer")
    if x_test is not None:
        x_test = np.asarray(x_test, dtype=model.dtype)
        y_test = np.asarray(y_test, dtype=np.int64)
    state = AdamState(lr=hyper.lr)
    params = model.param_dict()
    rng = RngStream(hyper.seed).spawn(0x7A1)
    n = len(y_train)
    history: list[dict] = []
    for epoch in range(1, hyper.epochs + 1):
        order = rng.spawn(epoch).permutation(n)
        total, correct = 0.0, 0
        for start in range(0, n, hyper.batch_size):
            idx = order[start : start + hyper.batch_size]
            loss, grads = model.loss_and_grads(x_train[idx], y_train[idx], train=True)
            if not math.isfinite(loss):
                raise TrainingDivergedError(f"loss became {loss} in epoch {epoch}", history=history)
            try:
                adam_step(params, grads, state)
            except TrainingDivergedError as exc:
                raise TrainingDivergedError(str(exc), history=history) from None
            total += loss * len(idx)
            correct += int(np.sum(model.layers[-1]._p.argmax(axis=1) == y_train[idx]))
        row = {
            "epoch": epoch,
            "loss": total / n,
            "train_acc": correct / n,
            "test_acc": accuracy(model, x_test, y_test) if x_test is not None else float("nan"),
        }
        history.append(row)
        log.debug("epoch %d loss %.4f train %.3f test %.3f", epoch, row["loss"], row["train_acc"], row["test_acc"])
    return TrainResult(model, history)
