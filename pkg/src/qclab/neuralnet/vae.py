"""Variational autoencoder with a two-dimensional Gaussian latent space.

The encoder maps a flattened image to ``(mu_1, mu_2, logvar_1, logvar_2)``;
the decoder mirrors it and ends in a sigmoid so that outputs are pixel
intensities in ``[0, 1]``.  The objective is the negative evidence lower
bound: binary cross-entropy summed over pixels plus the analytic Gaussian KL
term, both averaged over the batch.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import arrayio
from ..errors import TrainingDivergedError, ValidationError
from ..rng import RngStream
from .layers import Dense, ReLU, Sigmoid, sigmoid
from .model import Sequential
from .optim import AdamState, adam_step

log = logging.getLogger(__name__)

LATENT_DIM = 2


@dataclass(frozen=True)
class VaeLoss:
    total: float
    recon: float
    kl: float


def _check_target(target):
    t = np.asarray(target)
    if t.size and (t.min() < 0 or t.max() > 1):
        raise ValidationError("VAE targets must lie in [0, 1]")
    return t


def kl_term(mu, logvar) -> np.ndarray:
    """Per-sample ``-1/2 sum_j (1 + logvar_j - mu_j^2 - exp(logvar_j))``."""
    mu = np.atleast_2d(np.asarray(mu, dtype=np.float64))
    logvar = np.atleast_2d(np.asarray(logvar, dtype=np.float64))
    return -0.5 * np.sum(1.0 + logvar - mu * mu - np.exp(logvar), axis=1)


def bce_term(recon, target, eps: float = 1e-12) -> np.ndarray:
    """Per-sample binary cross-entropy summed over pixels."""
    r = np.clip(np.asarray(recon, dtype=np.float64), eps, 1 - eps)
    t = np.asarray(target, dtype=np.float64)
    r, t = r.reshape(len(r), -1), t.reshape(len(t), -1)
    return -np.sum(t * np.log(r) + (1 - t) * np.log(1 - r), axis=1)


def vae_loss(recon, target, mu, logvar) -> VaeLoss:
    """Negative ELBO averaged over the batch (the value that is minimized)."""
    target = _check_target(target)
    recon = np.atleast_2d(recon)
    target = np.atleast_2d(target)
    rec = float(np.mean(bce_term(recon, target)))
    kl = float(np.mean(kl_term(mu, logvar)))
    return VaeLoss(rec + kl, rec, kl)


def reparameterize(mu, logvar, noise):
    mu, logvar, noise = np.asarray(mu), np.asarray(logvar), np.asarray(noise)
    if not (mu.shape == logvar.shape == noise.shape):
        raise ValidationError(f"shape mismatch: mu {mu.shape}, logvar {logvar.shape}, noise {noise.shape}")
    return mu + np.exp(0.5 * logvar) * noise


@dataclass
class VAE:
    n_pixels: int = 1296
    hidden: int = 150
    seed: int = 0
    dtype: str = "float32"
    trained: bool = False
    history: list = field(default_factory=list)

    def __post_init__(self):
        h, dt = self.hidden, np.dtype(self.dtype)
        self.encoder = Sequential(
            [Dense(h), ReLU(), Dense(h), ReLU(), Dense(2 * LATENT_DIM)], (self.n_pixels,), seed=self.seed, dtype=dt
        )
        self.decoder = Sequential(
            [Dense(h), ReLU(), Dense(h), ReLU(), Dense(self.n_pixels), Sigmoid()],
            (LATENT_DIM,),
            seed=self.seed + 1,
            dtype=dt,
        )

    def _flat(self, x):
        x = np.asarray(x, dtype=self.encoder.dtype)
        return x.reshape(len(x), -1)

    def encode(self, x):
        out = self.encoder.forward(self._flat(x)).astype(np.float64)
        return out[:, :LATENT_DIM], out[:, LATENT_DIM:]

    def decode(self, z):
        return self.decoder.forward(np.asarray(z, dtype=self.decoder.dtype)).astype(np.float64)

    def latent(self, x, rng: RngStream | None = None, use_mean: bool = False):
        """Latent coordinates: the posterior mean, or one reparameterized draw."""
        if not self.trained:
            raise ValidationError("VAE has not been trained")
        mu, logvar = self.encode(x)
        if use_mean or rng is None:
            return mu
        return reparameterize(mu, logvar, rng.normal(mu.shape))

    def reconstruction_loss(self, x) -> np.ndarray:
        """Per-sample BCE of the decoded posterior mean."""
        x = self._flat(x)
        mu, _ = self.encode(x)
        return bce_term(self.decode(mu), x)

    def params(self) -> dict:
        p = {f"enc.{k}": v for k, v in self.encoder.parameters()}
        p.update({f"dec.{k}": v for k, v in self.decoder.parameters()})
        return p

    def step_grads(self, x, noise, scale: float = 1.0):
        """Loss and gradients for one batch with given latent noise."""
        x = self._flat(x)
        b = len(x)
        enc = self.encoder.forward(x, train=True)
        mu, logvar = enc[:, :LATENT_DIM], enc[:, LATENT_DIM:]
        std = np.exp(0.5 * logvar)
        z = mu + std * noise.astype(enc.dtype)
        # decoder up to the logits; the sigmoid is fused with the BCE gradient
        logits = self.decoder.forward(z, train=True, upto=len(self.decoder.layers) - 1)
        recon = sigmoid(logits.astype(np.float64))
        loss = vae_loss(recon, x, mu, logvar)
        g = (scale / b) * (recon - x)
        dz = self.decoder.backward(g.astype(enc.dtype), start=len(self.decoder.layers) - 1)
        dmu = dz + (scale / b) * mu
        dlogvar = dz * noise * 0.5 * std + (scale / b) * 0.5 * (np.exp(logvar) - 1.0)
        self.encoder.backward(np.concatenate([dmu, dlogvar], axis=1).astype(enc.dtype))
        grads = {f"enc.{k}": v for k, v in self.encoder.gradients().items()}
        grads.update({f"dec.{k}": v for k, v in self.decoder.gradients().items()})
        return loss, grads

    def fit(self, x, epochs: int = 50, batch_size: int = 40, lr: float = 1e-3, seed: int | None = None):
        x = self._flat(x)
        _check_target(x)
        rng = RngStream(self.seed if seed is None else seed).spawn(0xAE)
        state = AdamState(lr=lr)
        params = self.params()
        n = len(x)
        for epoch in range(1, epochs + 1):
            er = rng.spawn(epoch)
            order = er.permutation(n)
            noise_all = er.spawn(1).normal((n, LATENT_DIM))
            tot = rec = kl = 0.0
            for start in range(0, n, batch_size):
                idx = order[start : start + batch_size]
                loss, grads = self.step_grads(x[idx], noise_all[start : start + len(idx)])
                if not math.isfinite(loss.total):
                    raise TrainingDivergedError(f"VAE loss became {loss.total} in epoch {epoch}", self.history)
                adam_step(params, grads, state)
                tot += loss.total * len(idx)
                rec += loss.recon * len(idx)
                kl += loss.kl * len(idx)
            self.history.append({"epoch": epoch, "loss": tot / n, "recon": rec / n, "kl": kl / n})
            log.debug("vae epoch %d loss %.3f", epoch, tot / n)
        self.trained = True
        return self

    def save(self, directory) -> None:
        d = Path(directory)
        for prefix, net in (("enc", self.encoder), ("dec", self.decoder)):
            for key, arr in net.state().items():
                arrayio.write_array(d / f"{prefix}_{key}.qarr", arr)
        arrayio.write_json(
            d / "vae.json",
            {
                "n_pixels": self.n_pixels,
                "hidden": self.hidden,
                "seed": self.seed,
                "latent_dim": LATENT_DIM,
                "encoder": sorted(self.encoder.state()),
                "decoder": sorted(self.decoder.state()),
                "history": self.history,
            },
        )

    @classmethod
    def load(cls, directory) -> "VAE":
        d = Path(directory)
        meta = arrayio.read_json(d / "vae.json")
        vae = cls(n_pixels=meta["n_pixels"], hidden=meta["hidden"], seed=meta["seed"])
        vae.encoder.load_state({k: arrayio.read_array(d / f"enc_{k}.qarr") for k in meta["encoder"]})
        vae.decoder.load_state({k: arrayio.read_array(d / f"dec_{k}.qarr") for k in meta["decoder"]})
        vae.history = meta.get("history", [])
        vae.trained = True
        return vae
