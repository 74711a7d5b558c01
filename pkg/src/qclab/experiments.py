"""Experiment drivers: activation curves over lambda, critical regions,
confusion scans with W-peak location, VAE latent clustering, Mahalanobis
anomaly flags and latent-space mosaics."""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .dataset import LabeledSet
from .errors import NumericalError, TrainingDivergedError, ValidationError
from .neuralnet import VAE, Hyper, Sequential, accuracy, train_classifier
from .rng import RngStream
from .spectral import SpacingHistogram, kl_critical_point, kl_divergence, POISSON, WIGNER_DYSON, r_ratio, spacing_histogram, unfold

log = logging.getLogger(__name__)


# ------------------------------------------------------ activation curves


@dataclass
class ActivationCurve:
    lambdas: np.ndarray
    p2: np.ndarray
    stderr: np.ndarray
    counts: np.ndarray
    meta: dict = field(default_factory=dict)

    def rows(self):
        return list(zip(self.lambdas.tolist(), self.p2.tolist(), self.stderr.tolist()))


def activation_curve(model: Sequential, test_sets: Mapping[float, LabeledSet] | LabeledSet, lambdas=None) -> ActivationCurve:
    """Mean chaotic-class probability per lambda.

    ``test_sets`` is a mapping lambda -> set, or one set whose samples carry
    their lambda.  If ``lambdas`` is given every one of them must be present.
    """
    if isinstance(test_sets, LabeledSet):
        test_sets = {float(l): test_sets.at_lambda(l) for l in test_sets.lambda_grid()}
    grid = sorted(float(l) for l in (lambdas if lambdas is not None else test_sets))
    have = {round(float(k), 9): v for k, v in test_sets.items()}
    p2, se, cnt = [], [], []
    for lam in grid:
        s = have.get(round(lam, 9))
        if s is None or len(s) == 0:
            raise ValidationError(f"no test set at lambda={lam}")
        p = model.predict_proba(s.network_input())[:, 1]
        p2.append(float(p.mean()))
        se.append(float(p.std(ddof=1) / math.sqrt(len(p))) if len(p) > 1 else 0.0)
        cnt.append(len(p))
    return ActivationCurve(np.array(grid), np.array(p2), np.array(se), np.array(cnt))


@dataclass(frozen=True)
class CriticalRegion:
    lo: float
    hi: float
    open_lo: bool = False
    open_hi: bool = False

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, lam: float, pad: float = 0.0) -> bool:
        return self.lo - pad <= lam <= self.hi + pad


def critical_region(curve: ActivationCurve, confidence: float = 0.9) -> CriticalRegion:
    """Smallest interval of grid points outside which the network is
    confident (``p2 <= 1 - confidence`` or ``p2 >= confidence``).

    With no uncertain grid point the region has zero width, placed midway
    between the last confidently regular and the first confidently chaotic
    point.  A side on which the curve is never confident is flagged open.
    """
    if not 0.5 < confidence < 1.0:
        raise ValidationError("confidence must lie in (0.5, 1)")
    lam, p = np.asarray(curve.lambdas, float), np.asarray(curve.p2, float)
    if len(lam) < 2:
        raise ValidationError("need at least two curve points")
    reg = p <= 1.0 - confidence
    cha = p >= confidence
    unsure = ~(reg | cha)
    open_lo = not reg.any()
    open_hi = not cha.any()
    if unsure.any():
        idx = np.nonzero(unsure)[0]
        lo, hi = lam[idx[0]], lam[idx[-1]]
    elif open_lo or open_hi:
        lo = hi = lam[0] if open_lo else lam[-1]
    else:
        j = np.nonzero(cha)[0][0]
        before = np.nonzero(reg[:j])[0]
        a = lam[before[-1]] if before.size else lam[0]
        lo = hi = 0.5 * (a + lam[j])
    if open_lo:
        lo = lam[0]
    if open_hi:
        hi = lam[-1]
    return CriticalRegion(float(lo), float(hi), bool(open_lo), bool(open_hi))


def activation_midpoint(curve: ActivationCurve) -> float:
    """First lambda where ``p2`` crosses 1/2 (linear interpolation)."""
    lam, d = curve.lambdas, curve.p2 - 0.5
    for i in range(len(lam) - 1):
        if d[i] == 0:
            return float(lam[i])
        if d[i] * d[i + 1] < 0:
            return float(lam[i] + d[i] / (d[i] - d[i + 1]) * (lam[i + 1] - lam[i]))
    raise NumericalError("activation curve never crosses 1/2")


# -------------------------------------------------------- confusion scans


@dataclass
class ConfusionCurve:
    trials: np.ndarray
    accuracy: np.ndarray  # nan where training diverged
    data_lambdas: np.ndarray
    histories: list = field(default_factory=list)

    def rows(self):
        return [(t, a, 0.0) for t, a in zip(self.trials.tolist(), self.accuracy.tolist())]


def trial_points(data_lambdas) -> np.ndarray:
    """Midpoints between consecutive data lambdas plus one half-step beyond
    each end, where every sample falls into a single class."""
    lam = np.unique(np.asarray(data_lambdas, float))
    if len(lam) < 2:
        raise ValidationError("need at least two distinct lambdas")
    mid = 0.5 * (lam[1:] + lam[:-1])
    return np.concatenate([[lam[0] - 0.5 * (lam[1] - lam[0])], mid, [lam[-1] + 0.5 * (lam[-1] - lam[-2])]])


def confusion_labels(lambdas, trial: float) -> np.ndarray:
    return (np.asarray(lambdas) >= trial).astype(np.int64)


def _confusion_job(args):
    data, trial, index, factory, hyper = args
    y = confusion_labels(data.lambdas, trial)
    seed = int(RngStream(hyper.seed).spawn(0xC0F, index).words(1)[0] >> 33)
    h = Hyper(epochs=hyper.epochs, batch_size=hyper.batch_size, lr=hyper.lr, seed=seed)
    model = factory(seed)
    x = data.network_input()
    tr, te = data.split.train, data.split.test
    try:
        res = train_classifier(model, x[tr], y[tr], x[te], y[te], h)
    except TrainingDivergedError as exc:
        log.warning("trial %.4f diverged: %s", trial, exc)
        return float("nan"), exc.history or []
    return accuracy(res.model, x[te], y[te]), res.history


def confusion_scan(
    data: LabeledSet,
    model_factory: Callable[[int], Sequential],
    hyper: Hyper,
    trials: Optional[Sequence[float]] = None,
    jobs: int = 1,
) -> ConfusionCurve:
    """Retrain from scratch at every trial point with labels
    ``0 if lambda < trial else 1``; record held-out accuracy.

    ``model_factory(seed)`` returns a fresh network; the seed of trial ``i``
    is derived from ``(hyper.seed, i)``.  Diverged trials are kept as nan.
    """
    if data.split is None:
        raise ValidationError("confusion scan needs a train/test split")
    trials = trial_points(data.lambdas) if trials is None else np.asarray(trials, float)
    jobs_args = [(data, float(t), i, model_factory, hyper) for i, t in enumerate(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_confusion_job, jobs_args))
    else:
        results = []
        for a in jobs_args:
            results.append(_confusion_job(a))
            log.info("confusion trial %.4f: accuracy %.4f", a[1], results[-1][0])
    acc = np.array([r[0] for r in results])
    return ConfusionCurve(np.asarray(trials), acc, np.unique(data.lambdas), [r[1] for r in results])


@dataclass(frozen=True)
class WPeak:
    lam: float
    index: int
    smoothed: np.ndarray
    has_peak: bool


def find_w_peak(curve: ConfusionCurve | Sequence[float], trials=None, window: int = 3) -> WPeak:
    """Location of the middle peak of a W-shaped accuracy curve.

    The two end trials are excluded; a ``window``-point moving average is
    formed over the remaining interior trials and only positions whose
    whole window lies inside the interior compete.  Ties go to the candidate
    nearest the grid center.  ``has_peak`` is false when the interior
    accuracies are monotone.
    """
    if isinstance(curve, ConfusionCurve):
        acc, trials = np.asarray(curve.accuracy, float), np.asarray(curve.trials, float)
    else:
        acc = np.asarray(curve, float)
        trials = np.arange(len(acc), dtype=float) if trials is None else np.asarray(trials, float)
    half = window // 2
    if len(acc) < 2 + window:
        raise ValidationError(f"need at least {2 + window} trial points, got {len(acc)}")
    inner = acc[1:-1]
    # missing trials are skipped in the average
    vals = np.where(np.isfinite(inner), inner, 0.0)
    cnt = np.isfinite(inner).astype(float)
    k = np.ones(window)
    num = np.convolve(vals, k, mode="valid")
    den = np.convolve(cnt, k, mode="valid")
    sm = np.where(den > 0, num / np.maximum(den, 1), -np.inf)
    cand = np.arange(len(sm)) + half + 1  # index into acc
    best = sm.max()
    ties = cand[np.isclose(sm, best, rtol=0, atol=1e-12)]
    center = 0.5 * (len(acc) - 1)
    pick = int(ties[np.argmin(np.abs(ties - center))])
    d = np.diff(inner[np.isfinite(inner)])
    monotone = len(d) > 0 and (np.all(d >= 0) or np.all(d <= 0))
    return WPeak(float(trials[pick]), pick, sm, not monotone)


# ------------------------------------------------------------------- VAE


@dataclass
class LatentCloud:
    z: np.ndarray
    classes: np.ndarray  # 0 regular, 1 chaotic, 2 scar candidate
    lambdas: np.ndarray

    CLASS_NAMES = ("regular", "chaotic", "scar")

    def rows(self):
        return [(a, b, self.CLASS_NAMES[c], l) for (a, b), c, l in zip(self.z.tolist(), self.classes.tolist(), self.lambdas.tolist())]


@dataclass(frozen=True)
class Separation:
    score: float
    direction: tuple
    threshold: float
    degenerate: bool = False


def best_linear_split(z, y, n_angles: int = 720) -> Separation:
    """Highest accuracy of a half-plane classifier ``n . z > t`` over
    ``n_angles`` directions and all thresholds."""
    z, y = np.asarray(z, float), np.asarray(y)
    classes = np.unique(y)
    if len(classes) < 2:
        return Separation(1.0, (1.0, 0.0), float("nan"), degenerate=True)
    if len(classes) > 2:
        raise ValidationError("linear split needs two classes")
    pos = y == classes[1]
    n = len(y)
    best = Separation(0.0, (1.0, 0.0), 0.0)
    for th in np.linspace(0.0, np.pi, n_angles, endpoint=False):
        d = np.array([math.cos(th), math.sin(th)])
        proj = z @ d
        order = np.argsort(proj, kind="stable")
        p = pos[order]
        # threshold after position i: left side predicted negative
        left_neg = np.concatenate([[0], np.cumsum(~p)])
        right_pos = np.concatenate([[0], np.cumsum(p[::-1])])[::-1]
        acc = (left_neg + right_pos) / n
        acc = np.maximum(acc, 1.0 - acc)  # either orientation
        i = int(acc.argmax())
        if acc[i] > best.score:
            sp = proj[order]
            t = sp[0] - 1 if i == 0 else sp[-1] + 1 if i == n else 0.5 * (sp[i - 1] + sp[i])
            best = Separation(float(acc[i]), (float(d[0]), float(d[1])), float(t))
    return best


def vae_cluster(vae: VAE, samples: LabeledSet, rng: Optional[RngStream] = None, use_mean: bool = False):
    """Encode samples and score how well a straight line separates the
    two labeled classes in the latent plane."""
    if not vae.trained:
        raise ValidationError("VAE has not been trained")
    rng = rng or RngStream(0)
    z = vae.latent(samples.x, rng=None if use_mean else rng, use_mean=use_mean)
    cloud = LatentCloud(z, samples.labels.copy(), samples.lambdas.copy())
    labeled = samples.labels >= 0
    return cloud, best_linear_split(z[labeled], samples.labels[labeled])


@dataclass(frozen=True)
class AnomalyResult:
    flags: np.ndarray
    distance: np.ndarray
    mean: np.ndarray
    cov: np.ndarray


def mahalanobis_fit(z, ridge: float = 1e-6):
    z = np.asarray(z, float)
    mu = z.mean(axis=0)
    cov = np.cov(z, rowvar=False)
    if np.linalg.cond(cov) > 1e12 or np.linalg.det(cov) <= 0:
        warnings.warn("singular latent covariance; adding ridge", RuntimeWarning, stacklevel=2)
        cov = cov + ridge * np.eye(len(mu))
    return mu, cov


def mahalanobis(z, mu, cov) -> np.ndarray:
    d = np.asarray(z, float) - mu
    return np.sqrt(np.einsum("ij,ij->i", d, np.linalg.solve(cov, d.T).T))


def detect_anomalies(
    vae: VAE,
    reference: LabeledSet | np.ndarray,
    candidates: LabeledSet | np.ndarray,
    threshold_sigma: float = 3.0,
    rng: Optional[RngStream] = None,
    use_mean: bool = False,
) -> AnomalyResult:
    """Flag candidates whose latent Mahalanobis distance to a Gaussian fit
    of the reference (chaotic) cloud exceeds ``threshold_sigma``.

    Either argument may be given as precomputed latent coordinates.
    """
    rng = rng or RngStream(0)

    def lat(s, key):
        if isinstance(s, LabeledSet):
            return vae.latent(s.x, rng=None if use_mean else rng.spawn(key), use_mean=use_mean)
        return np.asarray(s, float)

    ref = lat(reference, 1)
    if len(ref) < 50:
        raise ValidationError(f"reference cloud needs at least 50 points, got {len(ref)}")
    cand = lat(candidates, 2)
    mu, cov = mahalanobis_fit(ref)
    dist = mahalanobis(cand, mu, cov)
    return AnomalyResult(dist > threshold_sigma, dist, mu, cov)


def latent_scan(vae: VAE, z1, z2) -> np.ndarray:
    """Decode the lattice ``z1 x z2``; tiles are ordered row-major with
    ``z2`` selecting the row and ``z1`` the column.  Returns
    ``(len(z2) * len(z1), 36, 36)``."""
    if not vae.trained:
        raise ValidationError("VAE has not been trained")
    z1, z2 = np.asarray(z1, float), np.asarray(z2, float)
    zz2, zz1 = np.meshgrid(z2, z1, indexing="ij")
    z = np.stack([zz1.ravel(), zz2.ravel()], axis=1)
    side = int(round(math.sqrt(vae.n_pixels)))
    return vae.decode(z).reshape(len(z), side, side)


def mosaic(tiles: np.ndarray, n_cols: int, pad: int = 1) -> np.ndarray:
    n, h, w = tiles.shape
    n_rows = math.ceil(n / n_cols)
    out = np.zeros((n_rows * (h + pad) - pad, n_cols * (w + pad) - pad))
    for k in range(n):
        r, c = divmod(k, n_cols)
        out[r * (h + pad) : r * (h + pad) + h, c * (w + pad) : c * (w + pad) + w] = tiles[k]
    return out


# ----------------------------------------------------------- KL estimates


@dataclass
class KlCurve:
    lambdas: np.ndarray
    kl_poisson: np.ndarray
    kl_wd: np.ndarray
    r_mean: np.ndarray
    histograms: list

    @property
    def critical_point(self) -> float:
        return kl_critical_point(list(zip(self.lambdas.tolist(), (self.kl_poisson - self.kl_wd).tolist())))


def pooled_histogram(spectra: Sequence[np.ndarray]) -> tuple[SpacingHistogram, float]:
    """Histogram of spacings unfolded spectrum by spectrum, and the mean
    gap ratio over all spectra."""
    spacings = np.concatenate([unfold(e).spacings for e in spectra])
    r = float(np.mean([r_ratio(e) for e in spectra]))
    return spacing_histogram(spacings), r


def kl_curve(spectra_by_lambda: Mapping[float, Sequence[np.ndarray]]) -> KlCurve:
    lams = sorted(spectra_by_lambda)
    kp, kw, rs, hs = [], [], [], []
    for lam in lams:
        h, r = pooled_histogram(spectra_by_lambda[lam])
        kp.append(kl_divergence(h, POISSON))
        kw.append(kl_divergence(h, WIGNER_DYSON))
        rs.append(r)
        hs.append(h)
    return KlCurve(np.array(lams, float), np.array(kp), np.array(kw), np.array(rs), hs)


def chain_spectra(perturbation: str, lam: float, draws: int, N: int = 13, seed: int = 0, pauli: bool = False) -> list[np.ndarray]:
    """Sector spectra for ``draws`` random ``Jzz`` in the dataset range."""
    from .dataset import JZZ_RANGE, _lam_key
    from .spinchain import ChainParams, solve_chain

    out = []
    for i in range(draws):
        rng = RngStream(seed).spawn(0x5BEC, _lam_key(lam), i)
        jzz = rng.uniform(*JZZ_RANGE)
        out.append(solve_chain(ChainParams(N=N, Jzz=jzz, perturbation=perturbation, lam=lam, pauli=pauli)).energies)
    return out
