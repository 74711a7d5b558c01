"""Layer vocabulary with hand-written backward passes.

Tensors are ``(batch, channels, height, width)`` for images and
``(batch, features)`` otherwise.  Each layer caches what its backward pass
needs during ``forward`` and accumulates nothing: ``backward`` overwrites
``self.grads``.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ValidationError
from ..rng import RngStream


class Layer:
    kind = "layer"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.buffers: dict[str, np.ndarray] = {}
        self.name = self.kind

    def build(self, in_shape: tuple, rng: RngStream, dtype) -> tuple:
        """Allocate parameters for per-sample input shape ``in_shape``;
        returns the per-sample output shape."""
        return in_shape

    def forward(self, x, train: bool):
        raise NotImplementedError

    def backward(self, g):
        raise NotImplementedError

    def config(self) -> dict:
        return {"type": self.kind}


def _uniform_init(rng: RngStream, shape, fan_in: int, dtype):
    bound = math.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Conv2D(Layer):
    kind = "conv2d"

    def __init__(self, out_ch: int, k: int, stride: int = 1):
        super().__init__()
        self.out_ch, self.k, self.stride = int(out_ch), int(k), int(stride)

    def build(self, in_shape, rng, dtype):
        if len(in_shape) != 3:
            raise ValidationError(f"{self.name}: expects (C, H, W) input, got {in_shape}")
        c, h, w = in_shape
        k, s = self.k, self.stride
        if h < k or w < k:
            raise ValidationError(f"{self.name}: kernel {k} larger than input {h}x{w}")
        fan_in = c * k * k
        self.params["W"] = _uniform_init(rng, (self.out_ch, c, k, k), fan_in, dtype)
        self.params["b"] = np.zeros(self.out_ch, dtype=dtype)
        return (self.out_ch, (h - k) // s + 1, (w - k) // s + 1)

    def _windows(self, x):
        win = sliding_window_view(x, (self.k, self.k), axis=(2, 3))
        return win[:, :, :: self.stride, :: self.stride]

    def forward(self, x, train):
        self._x = x
        win = self._windows(x)  # (N, C, Ho, Wo, k, k)
        out = np.tensordot(win, self.params["W"], axes=([1, 4, 5], [1, 2, 3]))  # (N, Ho, Wo, F)
        out += self.params["b"]
        return out.transpose(0, 3, 1, 2)

    def backward(self, g):
        x, W, k, s = self._x, self.params["W"], self.k, self.stride
        win = self._windows(x)
        ho, wo = g.shape[2], g.shape[3]
        self.grads["W"] = np.tensordot(g, win, axes=([0, 2, 3], [0, 2, 3]))
        self.grads["b"] = g.sum(axis=(0, 2, 3))
        dx = np.zeros_like(x)
        for i in range(k):
            for j in range(k):
                contrib = np.tensordot(g, W[:, :, i, j], axes=([1], [0]))  # (N, Ho, Wo, C)
                dx[:, :, i : i + s * ho : s, j : j + s * wo : s] += contrib.transpose(0, 3, 1, 2)
        return dx

    def config(self):
        return {"type": self.kind, "out_ch": self.out_ch, "k": self.k, "stride": self.stride}


class MaxPool2(Layer):
    kind = "maxpool"

    def build(self, in_shape, rng, dtype):
        if len(in_shape) != 3:
            raise ValidationError(f"{self.name}: expects (C, H, W) input, got {in_shape}")
        c, h, w = in_shape
        if h % 2 or w % 2:
            raise ValidationError(f"{self.name}: spatial size {h}x{w} not even")
        return (c, h // 2, w // 2)

    def forward(self, x, train):
        n, c, h, w = x.shape
        xr = x.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h // 2, w // 2, 4)
        self._idx = xr.argmax(axis=-1)
        self._shape = x.shape
        return np.take_along_axis(xr, self._idx[..., None], axis=-1)[..., 0]

    def backward(self, g):
        n, c, h, w = self._shape
        d = np.zeros((n, c, h // 2, w // 2, 4), dtype=g.dtype)
        np.put_along_axis(d, self._idx[..., None], g[..., None], axis=-1)
        return d.reshape(n, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h, w)


class BatchNorm(Layer):
    """Per-channel (images) or per-feature normalization.  Train mode uses
    batch statistics (biased variance) and updates the running averages;
    eval mode uses the running averages."""

    kind = "batchnorm"

    def __init__(self, momentum: float = 0.1, eps: float = 1e-5):
        super().__init__()
        self.momentum, self.eps = momentum, eps

    def build(self, in_shape, rng, dtype):
        c = in_shape[0]
        self.params["gamma"] = np.ones(c, dtype=dtype)
        self.params["beta"] = np.zeros(c, dtype=dtype)
        self.buffers["mean"] = np.zeros(c, dtype=dtype)
        self.buffers["var"] = np.ones(c, dtype=dtype)
        return in_shape

    def _axes(self, x):
        return (0, 2, 3) if x.ndim == 4 else (0,)

    def _bc(self, v, x):
        return v.reshape(1, -1, 1, 1) if x.ndim == 4 else v.reshape(1, -1)

    def forward(self, x, train):
        axes = self._axes(x)
        if train:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            m = self.momentum
            self.buffers["mean"] = ((1 - m) * self.buffers["mean"] + m * mean).astype(x.dtype)
            self.buffers["var"] = ((1 - m) * self.buffers["var"] + m * var).astype(x.dtype)
        else:
            mean, var = self.buffers["mean"], self.buffers["var"]
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - self._bc(mean, x)) * self._bc(inv, x)
        self._cache = (xhat, inv, train)
        return self._bc(self.params["gamma"], x) * xhat + self._bc(self.params["beta"], x)

    def backward(self, g):
        xhat, inv, train = self._cache
        axes = self._axes(g)
        self.grads["gamma"] = (g * xhat).sum(axis=axes)
        self.grads["beta"] = g.sum(axis=axes)
        gx = g * self._bc(self.params["gamma"], g)
        if not train:
            return gx * self._bc(inv, g)
        mean_g = gx.mean(axis=axes, keepdims=True)
        mean_gx = (gx * xhat).mean(axis=axes, keepdims=True)
        return (gx - mean_g - xhat * mean_gx) * self._bc(inv, g)

    def config(self):
        return {"type": self.kind, "momentum": self.momentum, "eps": self.eps}


class Dropout(Layer):
    kind = "dropout"

    def __init__(self, p: float = 0.5):
        super().__init__()
        if not 0.0 <= p < 1.0:
            raise ValidationError(f"dropout p must be in [0, 1), got {p}")
        self.p = p
        self.rng = RngStream(0)

    def build(self, in_shape, rng, dtype):
        self.rng = rng.spawn(0xD0)
        return in_shape

    def forward(self, x, train):
        if not train or self.p == 0.0:
            self._mask = None
            return x
        keep = self.rng.random(x.shape) >= self.p
        self._mask = (keep / (1.0 - self.p)).astype(x.dtype)
        return x * self._mask

    def backward(self, g):
        return g if self._mask is None else g * self._mask

    def config(self):
        return {"type": self.kind, "p": self.p}


class Dense(Layer):
    """Fully connected layer; flattens image input."""

    kind = "dense"

    def __init__(self, units: int):
        super().__init__()
        self.units = int(units)

    def build(self, in_shape, rng, dtype):
        fan_in = int(np.prod(in_shape))
        self.params["W"] = _uniform_init(rng, (fan_in, self.units), fan_in, dtype)
        self.params["b"] = np.zeros(self.units, dtype=dtype)
        return (self.units,)

    def forward(self, x, train):
        self._shape = x.shape
        x2 = x.reshape(x.shape[0], -1)
        self._x = x2
        return x2 @ self.params["W"] + self.params["b"]

    def backward(self, g):
        self.grads["W"] = self._x.T @ g
        self.grads["b"] = g.sum(axis=0)
        return (g @ self.params["W"].T).reshape(self._shape)

    def config(self):
        return {"type": self.kind, "units": self.units}


class ReLU(Layer):
    kind = "relu"

    def forward(self, x, train):
        self._pos = x > 0
        return x * self._pos

    def backward(self, g):
        return g * self._pos


class Sigmoid(Layer):
    kind = "sigmoid"

    def forward(self, x, train):
        self._y = sigmoid(x)
        return self._y

    def backward(self, g):
        return g * self._y * (1 - self._y)


class Softmax(Layer):
    kind = "softmax"

    def forward(self, x, train):
        self._p = softmax(x)
        return self._p

    def backward(self, g):
        p = self._p
        return p * (g - (g * p).sum(axis=1, keepdims=True))


def sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def softmax(x):
    z = x - x.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


LAYER_TYPES = {
    cls.kind: cls for cls in (Conv2D, MaxPool2, BatchNorm, Dropout, Dense, ReLU, Sigmoid, Softmax)
}


def layer_from_config(cfg: dict) -> Layer:
    cfg = dict(cfg)
    kind = cfg.pop("type")
    if kind not in LAYER_TYPES:
        raise ValidationError(f"unknown layer type {kind!r}")
    return LAYER_TYPES[kind](**cfg)
