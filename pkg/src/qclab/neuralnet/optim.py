"""Adam with bias-corrected moments."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainingDivergedError, ValidationError


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState) -> None:
    """Update ``params`` in place (arrays keyed like ``grads``)."""
    for key, g in grads.items():
        if key not in params:
            raise ValidationError(f"gradient for unknown parameter {key!r}")
        if params[key].shape != g.shape:
            raise ValidationError(f"{key}: gradient shape {g.shape} != parameter shape {params[key].shape}")
        if not np.all(np.isfinite(g)):
            raise TrainingDivergedError(f"non-finite gradient in {key} at step {state.t + 1}", history=[])
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for key, g in grads.items():
        p = params[key]
        if key not in state.m:
            state.m[key] = np.zeros_like(p)
            state.v[key] = np.zeros_like(p)
        m, v = state.m[key], state.v[key]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        p -= (state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)).astype(p.dtype)
