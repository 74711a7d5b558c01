"""Sequential networks, losses and checkpoints."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .. import arrayio
from ..errors import ValidationError
from ..rng import RngStream
from .layers import Layer, Softmax, layer_from_config


class Sequential:
    """Ordered stack of layers, shape-checked when built.

    Parameters are created in ``dtype`` (float32 for training, float64 for
    gradient checks) from an :class:`RngStream` derived from ``seed``.
    """

    def __init__(self, layers: list[Layer], input_shape: tuple, seed: int = 0, dtype=np.float32):
        self.layers = list(layers)
        self.input_shape = tuple(int(s) for s in input_shape)
        self.seed = int(seed)
        self.dtype = np.dtype(dtype)
        rng = RngStream(seed)
        shape = self.input_shape
        counts: dict[str, int] = {}
        for i, layer in enumerate(self.layers):
            counts[layer.kind] = counts.get(layer.kind, 0) + 1
            layer.name = f"{layer.kind}{counts[layer.kind]}"
            try:
                shape = layer.build(shape, rng.spawn(i), self.dtype)
            except ValidationError as exc:
                raise ValidationError(f"layer {i} ({layer.name}): {exc}") from None
        self.output_shape = shape

    @property
    def ends_in_softmax(self) -> bool:
        return bool(self.layers) and isinstance(self.layers[-1], Softmax)

    def parameters(self):
        """Yield ``(key, array)`` for every trainable parameter, in a fixed order."""
        for i, layer in enumerate(self.layers):
            for name in sorted(layer.params):
                yield f"{i}.{layer.name}.{name}", layer.params[name]

    def gradients(self) -> dict[str, np.ndarray]:
        return {
            f"{i}.{layer.name}.{name}": layer.grads[name]
            for i, layer in enumerate(self.layers)
            for name in sorted(layer.params)
        }

    def param_dict(self) -> dict[str, np.ndarray]:
        return dict(self.parameters())

    def _check_input(self, x):
        if tuple(x.shape[1:]) != self.input_shape:
            first = self.layers[0].name if self.layers else "input"
            raise ValidationError(
                f"{first}: input shape {tuple(x.shape[1:])} does not match {self.input_shape}"
            )

    def forward(self, x, train: bool = False, upto: int | None = None):
        x = np.asarray(x, dtype=self.dtype)
        self._check_input(x)
        for layer in self.layers[:upto]:
            x = layer.forward(x, train)
        return x

    def backward(self, g, start: int | None = None):
        """Backpropagate ``g`` (gradient w.r.t. the output of layer
        ``start - 1``, default the last layer)."""
        stop = len(self.layers) if start is None else start
        for layer in reversed(self.layers[:stop]):
            g = layer.backward(g)
        return g

    def predict_proba(self, x, batch_size: int = 256) -> np.ndarray:
        x = np.asarray(x)
        out = [self.forward(x[i : i + batch_size], train=False) for i in range(0, len(x), batch_size)]
        return np.concatenate(out, axis=0).astype(np.float64)

    def loss_and_grads(self, x, y, train: bool = True, scale: float = 1.0):
        """Cross-entropy on integer labels; fills every layer's ``grads``.

        With a final softmax the gradient at the logits is formed directly
        as ``scale * (p - onehot) / batch``.
        """
        if not self.ends_in_softmax:
            raise ValidationError("cross-entropy needs a final softmax layer")
        y = np.asarray(y, dtype=np.int64)
        p = self.forward(x, train=train)
        loss = cross_entropy(p, y) * scale
        g = p.copy()
        g[np.arange(len(y)), y] -= 1.0
        g *= scale / len(y)
        self.backward(g.astype(self.dtype), start=len(self.layers) - 1)
        return loss, self.gradients()

    def config(self) -> dict:
        return {
            "input_shape": list(self.input_shape),
            "seed": self.seed,
            "layers": [layer.config() for layer in self.layers],
        }

    @classmethod
    def from_config(cls, cfg: dict, dtype=np.float32) -> "Sequential":
        layers = [layer_from_config(c) for c in cfg["layers"]]
        return cls(layers, tuple(cfg["input_shape"]), seed=cfg.get("seed", 0), dtype=dtype)

    def state(self) -> dict[str, np.ndarray]:
        out = {}
        for i, layer in enumerate(self.layers):
            for name, arr in list(layer.params.items()) + list(layer.buffers.items()):
                out[f"{i}.{name}"] = arr
        return out

    def load_state(self, state: dict) -> None:
        for i, layer in enumerate(self.layers):
            for store in (layer.params, layer.buffers):
                for name in store:
                    arr = np.asarray(state[f"{i}.{name}"], dtype=self.dtype)
                    if arr.shape != store[name].shape:
                        raise ValidationError(f"{layer.name}.{name}: shape {arr.shape} != {store[name].shape}")
                    store[name] = arr.copy()


def cross_entropy(p, y) -> float:
    p = np.asarray(p, dtype=np.float64)
    picked = np.clip(p[np.arange(len(y)), y], 1e-300, None)
    return float(-np.mean(np.log(picked)))


def save_model(model: Sequential, directory, extra: dict | None = None) -> None:
    d = Path(directory)
    state = model.state()
    for key, arr in state.items():
        arrayio.write_array(d / f"param_{key}.qarr", arr)
    meta = {"network": model.config(), "params": sorted(state)}
    if extra:
        meta.update(extra)
    arrayio.write_json(d / "model.json", meta)


def load_model(directory, dtype=np.float32) -> Sequential:
    d = Path(directory)
    meta = arrayio.read_json(d / "model.json")
    model = Sequential.from_config(meta["network"], dtype=dtype)
    model.load_state({k: arrayio.read_array(d / f"param_{k}.qarr") for k in meta["params"]})
    return model
