"""Checks shared by the unit and acceptance suites."""

import numpy as np

from qclab.neuralnet import Dropout
from qclab.rng import RngStream


def backward_error(sol):
    """Normwise backward error ||Av - Ev|| / (||A|| ||v||) per eigenpair,
    with the infinity norm as the bound on ||A||."""
    a = sol.grid.laplacian
    v = sol.eigenpairs.vectors
    r = np.linalg.norm(a @ v - v * sol.energies, axis=0) / np.linalg.norm(v, axis=0)
    return r / abs(a).sum(axis=1).max()


def finite_difference_check(model, x, h=1e-5, seed=0):
    """Worst relative error of backprop against central differences for the
    scalar ``sum(w * model(x))`` over every parameter entry and the input."""
    w = RngStream(seed).normal(model.output_shape and (len(x),) + model.output_shape)
    dropouts = [layer for layer in model.layers if isinstance(layer, Dropout)]
    counters = [d.rng.counter for d in dropouts]

    def f(inp):
        for d, c in zip(dropouts, counters):
            d.rng.counter = c
        return float(np.sum(w * model.forward(inp, train=True)))

    f(x)
    gx = model.backward(w)
    analytic = {k: g.copy() for k, g in model.gradients().items()}
    worst = 0.0

    # central differences carry roundoff ~ eps |f| / h ~ 1e-11, so the
    # denominator is floored well above that for (near-)zero gradients
    def rel(a, n):
        return abs(a - n) / max(abs(a) + abs(n), 1e-6)

    for key, p in model.parameters():
        flat = p.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            fp = f(x)
            flat[i] = old - h
            fm = f(x)
            flat[i] = old
            worst = max(worst, rel(analytic[key].reshape(-1)[i], (fp - fm) / (2 * h)))
    xf = x.reshape(-1)
    for i in range(0, xf.size, max(1, xf.size // 40)):
        old = xf[i]
        xf[i] = old + h
        fp = f(x)
        xf[i] = old - h
        fm = f(x)
        xf[i] = old
        worst = max(worst, rel(gx.reshape(-1)[i], (fp - fm) / (2 * h)))
    return worst


# criterion number -> (title, [(part, ok, detail)]), filled by the acceptance suite
ACCEPTANCE: dict = {}


def record(number: int, title: str, part: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE.setdefault(number, (title, []))[1].append((part, bool(ok), detail))
    return bool(ok)
