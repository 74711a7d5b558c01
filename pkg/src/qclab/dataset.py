"""Labeled datasets built from solver output.

Billiard samples are square fragments of ``|psi_n(x, y)|^2`` that avoid the
walls, area-averaged down to 36x36 and scaled to unit maximum.  The fragment
side is measured in local wavelengths ``2 pi / k_n`` so that every class and
every lambda shows the same number of oscillations per image; the network
then has to tell regular from chaotic patterns rather than read off the
wavelength.  Spin-chain samples are the probabilities ``|<psi_n|k>|^2`` of a
mid-spectrum eigenstate in the symmetry-adapted basis.

Every sample draws from its own child stream ``base.spawn(...)`` keyed by
(class or lambda, sample index), so a build is a pure function of its seed
and can be split across workers without changing a bit.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from . import arrayio
from .billiards import BilliardSolution
from .errors import GeometryError, NumericalError, ValidationError
from .rng import RngStream
from .spinchain import ChainParams, mid_spectrum_states, solve_chain

log = logging.getLogger(__name__)

OUT = 36
TRAIN_FRACTION = 0.7
DEFAULT_WINDOW = (300, 500)
DEFAULT_CROP_WAVES = 5.0
DEFAULT_MARGIN_WAVES = 0.25
AUGMENT_OPS = ("identity", "flipH", "flipV", "rot90", "rot180", "rot270", "rot_uniform")
ROT_MAX_DEG = 25.0
JZZ_RANGE = (0.8, 2.0)
CHAIN_LAMBDA0 = 0.3

BILLIARD_ANCHORS = {"sinai": 0.4, "stadium": 0.2, "pascal": 0.8}


@dataclass
class ImageSample:
    pixels: np.ndarray
    label: int = -1  # 0 regular, 1 chaotic, -1 unlabeled
    lam: float = float("nan")
    state: int = -1
    window: tuple = ()  # (row, col, side) of the crop on the source lattice

    def __post_init__(self):
        if self.pixels.shape != (OUT, OUT):
            raise ValidationError(f"image must be {OUT}x{OUT}, got {self.pixels.shape}")


@dataclass
class ProbVectorSample:
    probabilities: np.ndarray
    label: int = -1
    lam: float = float("nan")
    jzz: float = float("nan")
    state: int = -1


@dataclass(frozen=True)
class DatasetSplit:
    train: np.ndarray
    test: np.ndarray
    seed: int = 0

    def __post_init__(self):
        if np.intersect1d(self.train, self.test).size:
            raise ValidationError("train and test indices overlap")


def make_split(n: int, seed: int, train_frac: float = TRAIN_FRACTION) -> DatasetSplit:
    """Random disjoint split of ``range(n)``; ``round(train_frac * n)`` train indices."""
    perm = RngStream(seed).spawn(0x5B11).permutation(n)
    k = int(round(train_frac * n))
    return DatasetSplit(np.sort(perm[:k]), np.sort(perm[k:]), seed)


# ----------------------------------------------------------------- images


def _integral(mask: np.ndarray) -> np.ndarray:
    s = np.zeros((mask.shape[0] + 1, mask.shape[1] + 1), dtype=np.int64)
    s[1:, 1:] = np.cumsum(np.cumsum(mask, axis=0), axis=1)
    return s


def valid_windows(mask: np.ndarray, side: int, margin: int = 0, shrink: float = 0.0) -> np.ndarray:
    """Boolean map of top-left corners whose ``side`` x ``side`` window lies
    inside the bounding box of ``mask`` shrunk by the fraction ``shrink`` and,
    padded by ``margin`` pixels, entirely on interior points."""
    mask = np.asarray(mask, dtype=bool)
    rows, cols = np.nonzero(mask.any(axis=1))[0], np.nonzero(mask.any(axis=0))[0]
    if rows.size == 0:
        raise GeometryError("empty interior")
    r0, r1, c0, c1 = rows[0], rows[-1] + 1, cols[0], cols[-1] + 1
    dr, dc = int(round(0.5 * shrink * (r1 - r0))), int(round(0.5 * shrink * (c1 - c0)))
    r0, r1, c0, c1 = r0 + dr, r1 - dr, c0 + dc, c1 - dc
    ny, nx = mask.shape
    out = np.zeros((max(ny - side + 1, 0), max(nx - side + 1, 0)), dtype=bool)
    if out.size == 0:
        return out
    full = side + 2 * margin
    s = _integral(mask)
    i = np.arange(out.shape[0])[:, None]
    j = np.arange(out.shape[1])[None, :]
    a, b = i - margin, j - margin
    inb = (a >= 0) & (b >= 0) & (a + full <= ny) & (b + full <= nx)
    a_c, b_c = np.clip(a, 0, ny - full), np.clip(b, 0, nx - full)
    count = s[a_c + full, b_c + full] - s[a_c, b_c + full] - s[a_c + full, b_c] + s[a_c, b_c]
    out[:] = inb & (count == full * full)
    out &= (i >= r0) & (i + side <= r1) & (j >= c0) & (j + side <= c1)
    return out


def area_weights(n_in: int, n_out: int) -> np.ndarray:
    """``(n_out, n_in)`` matrix averaging input cells over each output cell
    by overlap length; rows sum to one."""
    edges_in = np.arange(n_in + 1) / n_in
    edges_out = np.arange(n_out + 1) / n_out
    lo = np.maximum(edges_out[:-1, None], edges_in[None, :-1])
    hi = np.minimum(edges_out[1:, None], edges_in[None, 1:])
    return np.clip(hi - lo, 0.0, None) * n_out


def area_downsample(block: np.ndarray, out: int = OUT) -> np.ndarray:
    r = area_weights(block.shape[0], out)
    c = area_weights(block.shape[1], out)
    return r @ block @ c.T


def choose_window(mask: np.ndarray, side: int, rng: RngStream, margin: int = 0, shrink: float = 0.0) -> tuple:
    ok = valid_windows(mask, side, margin, shrink)
    flat = np.flatnonzero(ok)
    if flat.size == 0:
        raise GeometryError(f"interior too small for a {side}-pixel crop (margin {margin})")
    pick = flat[rng.integers(0, flat.size)]
    i, j = np.unravel_index(pick, ok.shape)
    return int(i), int(j)


def crop_and_downsample(
    field: np.ndarray,
    crop_frac: float = 0.6,
    out: int = OUT,
    rng: Optional[RngStream] = None,
    mask: Optional[np.ndarray] = None,
    side: Optional[int] = None,
    margin: int = 0,
    normalize: bool = True,
) -> ImageSample:
    """Random square fragment of a non-negative field, area-averaged to
    ``out`` x ``out``.

    The side is ``side`` pixels if given, else ``crop_frac`` of the shorter
    side of the interior bounding box.  ``mask`` marks interior lattice points;
    without one the whole array counts as interior and the window is kept
    inside the central 90% of it instead.
    """
    field = np.asarray(field, dtype=np.float64)
    if field.ndim != 2:
        raise ValidationError("field must be two-dimensional")
    shrink = 0.0
    if mask is None:
        mask = np.ones(field.shape, dtype=bool)
        shrink = 0.1
    rng = rng or RngStream(0)
    if side is None:
        rows, cols = np.nonzero(mask.any(axis=1))[0], np.nonzero(mask.any(axis=0))[0]
        if rows.size == 0:
            raise GeometryError("empty interior")
        side = int(round(crop_frac * min(rows[-1] - rows[0] + 1, cols[-1] - cols[0] + 1)))
    if side < 1:
        raise GeometryError("crop side below one pixel")
    i, j = choose_window(mask, side, rng, margin, shrink)
    px = area_downsample(field[i : i + side, j : j + side], out)
    if normalize:
        top = px.max()
        if not top > 0:
            raise ValidationError("crop has no positive pixel")
        px = px / top
    return ImageSample(px, window=(i, j, side))


def rotate_bilinear(img: np.ndarray, degrees: float) -> np.ndarray:
    """Rotate about the image center; samples falling outside are 0."""
    n0, n1 = img.shape
    c0, c1 = (n0 - 1) / 2.0, (n1 - 1) / 2.0
    t = math.radians(degrees)
    ct, st = math.cos(t), math.sin(t)
    r, c = np.meshgrid(np.arange(n0) - c0, np.arange(n1) - c1, indexing="ij")
    src_r = ct * r - st * c + c0
    src_c = st * r + ct * c + c1
    return ndimage.map_coordinates(img, [src_r, src_c], order=1, mode="constant", cval=0.0)


def augment(sample: ImageSample, op: str, rng: Optional[RngStream] = None, angle: Optional[float] = None) -> ImageSample:
    if op not in AUGMENT_OPS:
        raise ValidationError(f"unknown augmentation {op!r}; expected one of {AUGMENT_OPS}")
    px = sample.pixels
    if op == "flipH":
        px = px[:, ::-1]
    elif op == "flipV":
        px = px[::-1, :]
    elif op in ("rot90", "rot180", "rot270"):
        px = np.rot90(px, k=int(op[3:]) // 90)
    elif op == "rot_uniform":
        if angle is None:
            angle = (rng or RngStream(0)).uniform(-ROT_MAX_DEG, ROT_MAX_DEG)
        px = rotate_bilinear(px, angle)
        top = px.max()
        if top > 0:
            px = px / top
    return ImageSample(np.ascontiguousarray(px), sample.label, sample.lam, sample.state, sample.window)


def excess_kurtosis(values) -> float:
    v = np.asarray(values, dtype=np.float64).ravel()
    v = v - v.mean()
    m2 = np.mean(v * v)
    return float(np.mean(v**4) / (m2 * m2) - 3.0)


# --------------------------------------------------------------- datasets


@dataclass
class LabeledSet:
    """Stacked samples with per-sample metadata.  ``labels`` of -1 mean
    unlabeled; ``split`` indexes into the sample axis."""

    x: np.ndarray
    labels: np.ndarray
    lambdas: np.ndarray
    states: np.ndarray
    jzz: np.ndarray
    kind: str
    split: Optional[DatasetSplit] = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.labels)

    def subset(self, idx) -> "LabeledSet":
        idx = np.asarray(idx, dtype=np.int64)
        return LabeledSet(
            self.x[idx], self.labels[idx], self.lambdas[idx], self.states[idx], self.jzz[idx], self.kind, None, dict(self.meta)
        )

    @property
    def train(self) -> "LabeledSet":
        return self.subset(self.split.train)

    @property
    def test(self) -> "LabeledSet":
        return self.subset(self.split.test)

    def at_lambda(self, lam: float, tol: float = 1e-9) -> "LabeledSet":
        return self.subset(np.nonzero(np.abs(self.lambdas - lam) <= tol)[0])

    def lambda_grid(self) -> np.ndarray:
        return np.unique(self.lambdas)

    def network_input(self) -> np.ndarray:
        """Images as ``(n, 1, 36, 36)``; probability vectors scaled by the
        sector dimension so that a uniform state has entries of one."""
        if self.kind == "chain":
            return self.x * self.x.shape[1]
        return self.x[:, None, :, :]

    def save(self, directory) -> None:
        d = Path(directory)
        arrayio.write_array(d / "samples.qarr", self.x)
        manifest = {
            "kind": self.kind,
            "labels": self.labels.tolist(),
            "lambdas": self.lambdas.tolist(),
            "states": self.states.tolist(),
            "jzz": [None if not np.isfinite(v) else float(v) for v in self.jzz],
            "meta": self.meta,
        }
        if self.split is not None:
            manifest["split"] = {"train": self.split.train.tolist(), "test": self.split.test.tolist(), "seed": self.split.seed}
        arrayio.write_json(d / "dataset.json", manifest)

    @classmethod
    def load(cls, directory) -> "LabeledSet":
        d = Path(directory)
        m = arrayio.read_json(d / "dataset.json")
        for key in ("kind", "labels", "lambdas", "states"):
            if key not in m:
                raise ValidationError(f"{d}: dataset manifest lacks {key!r}")
        x = arrayio.read_array(d / "samples.qarr")
        if len(x) != len(m["labels"]):
            raise ValidationError(f"{d}: {len(x)} samples but {len(m['labels'])} labels")
        split = None
        if "split" in m:
            s = m["split"]
            split = DatasetSplit(np.array(s["train"], dtype=np.int64), np.array(s["test"], dtype=np.int64), s["seed"])
        jzz = np.array([np.nan if v is None else v for v in m.get("jzz", [None] * len(x))], dtype=np.float64)
        return cls(
            x,
            np.array(m["labels"], dtype=np.int64),
            np.array(m["lambdas"], dtype=np.float64),
            np.array(m["states"], dtype=np.int64),
            jzz,
            m["kind"],
            split,
            m.get("meta", {}),
        )


def concat(sets: Sequence[LabeledSet]) -> LabeledSet:
    """Stack sets; splits are re-indexed and merged when all sets have one."""
    xs = np.concatenate([s.x for s in sets])
    split = None
    if all(s.split is not None for s in sets):
        off, tr, te = 0, [], []
        for s in sets:
            tr.append(s.split.train + off)
            te.append(s.split.test + off)
            off += len(s)
        split = DatasetSplit(np.concatenate(tr), np.concatenate(te), sets[0].split.seed)
    return LabeledSet(
        xs,
        np.concatenate([s.labels for s in sets]),
        np.concatenate([s.lambdas for s in sets]),
        np.concatenate([s.states for s in sets]),
        np.concatenate([s.jzz for s in sets]),
        sets[0].kind,
        split,
        dict(sets[0].meta),
    )


def _lam_key(lam: float) -> int:
    return int(round(lam * 1_000_000))


def state_wavelength(solution: BilliardSolution, n: int) -> float:
    return 2.0 * math.pi / math.sqrt(2.0 * solution.energies[n])


def _window_states(solution: BilliardSolution, window: tuple) -> np.ndarray:
    lo, hi = window
    stored = solution.eigenpairs.vectors.shape[1]
    if lo < solution.first_state or hi > solution.first_state + stored or hi > len(solution.energies) or lo >= hi:
        raise ValidationError(
            f"{solution.shape.kind} lambda={solution.shape.lam}: states {lo}..{hi - 1} not available "
            f"(stored {solution.first_state}..{solution.first_state + stored - 1})"
        )
    return np.arange(lo, hi)


def billiard_samples(
    solution: BilliardSolution,
    states: Sequence[int],
    count: int,
    rng: RngStream,
    label: int = -1,
    crop_waves: float = DEFAULT_CROP_WAVES,
    margin_waves: float = DEFAULT_MARGIN_WAVES,
    ops: Sequence[str] = AUGMENT_OPS,
    amplitudes: bool = False,
):
    """``count`` augmented crops cycling through ``states``.

    Sample ``i`` uses ``rng.spawn(i)`` and state ``states[i % len(states)]``.
    With ``amplitudes`` the raw crops of ``psi`` are returned alongside.
    """
    states = list(states)
    if not states:
        raise ValidationError("no source states")
    lam = solution.shape.lam
    mask = solution.grid.mask
    h = solution.grid.h
    fields: dict[int, np.ndarray] = {}
    out, raw = [], []
    for i in range(count):
        n = states[i % len(states)]
        if n not in fields:
            fields[n] = solution.field(n)
        psi = fields[n]
        wl = state_wavelength(solution, n) / h
        side = max(OUT // 4, int(round(crop_waves * wl)))
        margin = int(math.ceil(margin_waves * wl))
        r = rng.spawn(i)
        try:
            s = crop_and_downsample(psi * psi, rng=r.spawn(0), mask=mask, side=side, margin=margin)
        except GeometryError as exc:
            raise GeometryError(f"{solution.shape.kind} lambda={lam} state {n}: {exc}") from None
        op = ops[r.spawn(1).integers(0, len(ops))]
        s = augment(s, op, r.spawn(2))
        out.append(ImageSample(s.pixels, label, lam, int(n), s.window))
        if amplitudes:
            a, b, side = s.window
            raw.append(psi[a : a + side, b : b + side].copy())
    return (out, raw) if amplitudes else out


def _stack_images(samples: Sequence[ImageSample], kind: str, meta: dict) -> LabeledSet:
    n = len(samples)
    return LabeledSet(
        np.stack([s.pixels for s in samples]) if n else np.zeros((0, OUT, OUT)),
        np.array([s.label for s in samples], dtype=np.int64),
        np.array([s.lam for s in samples], dtype=np.float64),
        np.array([s.state for s in samples], dtype=np.int64),
        np.full(n, np.nan),
        kind,
        None,
        meta,
    )


def split_states(states: np.ndarray, rng: RngStream, train_frac: float = TRAIN_FRACTION):
    perm = np.asarray(states)[rng.permutation(len(states))]
    k = int(round(train_frac * len(states)))
    if k == 0 or k == len(states):
        raise ValidationError(f"cannot split {len(states)} source states {train_frac:.0%}/{1 - train_frac:.0%}")
    return np.sort(perm[:k]), np.sort(perm[k:])


def _split_samples(solution, states, n_samples, rng, label, train_frac, **kw) -> LabeledSet:
    """Samples from one solution with the source states split before
    augmentation: train samples only ever see train states."""
    tr_states, te_states = split_states(states, rng.spawn(0), train_frac)
    n_tr = int(round(train_frac * n_samples))
    tr = billiard_samples(solution, tr_states, n_tr, rng.spawn(1), label, **kw)
    te = billiard_samples(solution, te_states, n_samples - n_tr, rng.spawn(2), label, **kw)
    meta = {"train_states": tr_states.tolist(), "test_states": te_states.tolist()}
    ds = _stack_images(tr + te, "billiard", meta)
    ds.split = DatasetSplit(np.arange(n_tr), np.arange(n_tr, n_samples), 0)
    return ds


def _find(solutions, lam: float) -> BilliardSolution:
    for s in solutions:
        if abs(s.shape.lam - lam) <= 1e-9:
            return s
    raise ValidationError(f"no solution at lambda={lam}")


def _provenance(sol: BilliardSolution) -> dict:
    return {"kind": sol.shape.kind, "lambda": sol.shape.lam, "n_grid": sol.n_grid, "n_levels": len(sol.energies), "seed": sol.seed}


def build_billiard_dataset(
    solutions: Sequence[BilliardSolution],
    lambda0: float,
    per_class: int = 800,
    seed: int = 0,
    window: tuple = DEFAULT_WINDOW,
    train_frac: float = TRAIN_FRACTION,
    **crop_kw,
) -> LabeledSet:
    """Two-class set: crops of lambda=0 states (label 0) and lambda=lambda0
    states (label 1), split 70/30 by source state."""
    if per_class < 2:
        raise ValidationError("per_class must be at least 2")
    base = RngStream(seed)
    parts = []
    for label, lam in ((0, 0.0), (1, lambda0)):
        sol = _find(solutions, lam)
        states = _window_states(sol, window)
        part = _split_samples(sol, states, per_class, base.spawn(label), label, train_frac, **crop_kw)
        part.meta = {"provenance": [_provenance(sol)], **{f"class{label}_{k}": v for k, v in part.meta.items()}}
        parts.append(part)
    ds = concat(parts)
    ds.meta = {
        "lambda0": lambda0,
        "seed": seed,
        "window": list(window),
        "provenance": [_provenance(_find(solutions, 0.0)), _provenance(_find(solutions, lambda0))],
        **{k: v for p in parts for k, v in p.meta.items() if k != "provenance"},
    }
    ds.split = DatasetSplit(ds.split.train, ds.split.test, seed)
    return ds


def build_billiard_grid(
    solutions: Sequence[BilliardSolution],
    lambdas: Sequence[float],
    per_lambda: int,
    seed: int = 0,
    window: tuple = DEFAULT_WINDOW,
    train_frac: float = TRAIN_FRACTION,
    **crop_kw,
) -> LabeledSet:
    """Unlabeled crops at every lambda, each split 70/30 by source state."""
    base = RngStream(seed).spawn(0x6121D)
    parts = []
    for lam in lambdas:
        sol = _find(solutions, lam)
        parts.append(_split_samples(sol, _window_states(sol, window), per_lambda, base.spawn(_lam_key(lam)), -1, train_frac, **crop_kw))
    ds = concat(parts)
    ds.meta = {"seed": seed, "window": list(window), "provenance": [_provenance(_find(solutions, l)) for l in lambdas]}
    ds.split = DatasetSplit(ds.split.train, ds.split.test, seed)
    return ds


def billiard_test_set(
    solution: BilliardSolution,
    count: int,
    seed: int = 0,
    window: tuple = DEFAULT_WINDOW,
    states: Optional[Sequence[int]] = None,
    label: int = -1,
    **crop_kw,
) -> LabeledSet:
    """Evaluation crops at one lambda (all window states unless given)."""
    if states is None:
        states = _window_states(solution, window)
    rng = RngStream(seed).spawn(0x7E57, _lam_key(solution.shape.lam))
    ds = _stack_images(billiard_samples(solution, states, count, rng, label, **crop_kw), "billiard", {})
    ds.meta = {"provenance": [_provenance(solution)], "seed": seed}
    return ds


# ------------------------------------------------------------ spin chains


def _chain_job(args):
    perturbation, lam, N, seed_words, per_draw, pauli = args
    rng = RngStream(seed_words[0]).spawn(*seed_words[1:])
    jzz = rng.uniform(*JZZ_RANGE)
    params = ChainParams(N=N, Jzz=jzz, perturbation=perturbation, lam=lam, pauli=pauli)
    try:
        sol = solve_chain(params)
    except NumericalError as exc:
        raise type(exc)(f"chain solve failed at Jzz={jzz:.6f}, lambda={lam}: {exc}") from exc
    idx = mid_spectrum_states(sol, per_draw)
    return jzz, [(int(n), sol.probabilities(n)) for n in idx]


def _run(jobs, n_jobs: int):
    if n_jobs <= 1 or len(jobs) < 2:
        return [_chain_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as ex:
        return list(ex.map(_chain_job, jobs, chunksize=4))


def chain_samples(
    perturbation: str,
    lam: float,
    count: int,
    seed: int,
    role: int,
    N: int = 13,
    label: int = -1,
    states_per_draw: int = 1,
    jobs: int = 1,
    pauli: bool = False,
) -> LabeledSet:
    """``count`` probability vectors at one lambda; each group of
    ``states_per_draw`` shares one random ``Jzz`` draw."""
    draws = math.ceil(count / states_per_draw)
    tasks = [(perturbation, lam, N, (seed, role, _lam_key(lam), i), states_per_draw, pauli) for i in range(draws)]
    xs, jz, st = [], [], []
    for jzz, vecs in _run(tasks, jobs):
        for n, p in vecs:
            xs.append(p)
            jz.append(jzz)
            st.append(n)
    xs, jz, st = xs[:count], jz[:count], st[:count]
    return LabeledSet(
        np.array(xs),
        np.full(count, label, dtype=np.int64),
        np.full(count, float(lam)),
        np.array(st, dtype=np.int64),
        np.array(jz),
        "chain",
        None,
        {"perturbation": perturbation, "N": N, "pauli": pauli},
    )


def build_chain_dataset(
    perturbation: str,
    lambda_list: Sequence[float],
    n_train: int = 400,
    n_test: int = 100,
    seed: int = 0,
    N: int = 13,
    lambda0: float = CHAIN_LAMBDA0,
    states_per_draw: int = 1,
    jobs: int = 1,
    pauli: bool = False,
) -> LabeledSet:
    """Training samples at the anchors (``n_train / 2`` each, labels 0/1)
    and ``n_test`` evaluation samples at every lambda of ``lambda_list``.

    The split's ``train`` indices are the anchor samples; ``test`` indices
    cover the whole grid.  Anchor test samples carry their class label,
    others are unlabeled.
    """
    lams = [float(l) for l in lambda_list]
    if not any(abs(l) < 1e-12 for l in lams) or not any(abs(l - lambda0) < 1e-12 for l in lams):
        raise ValidationError(f"lambda_list must contain 0 and {lambda0}")
    if n_train < 2 or n_train % 2:
        raise ValidationError("n_train must be a positive even number")
    half = n_train // 2
    kw = dict(N=N, states_per_draw=states_per_draw, jobs=jobs, pauli=pauli)
    parts = [
        chain_samples(perturbation, 0.0, half, seed, 0, label=0, **kw),
        chain_samples(perturbation, lambda0, half, seed, 0, label=1, **kw),
    ]
    for lam in lams:
        label = 0 if abs(lam) < 1e-12 else 1 if abs(lam - lambda0) < 1e-12 else -1
        parts.append(chain_samples(perturbation, lam, n_test, seed, 1, label=label, **kw))
    ds = concat(parts)
    ds.split = DatasetSplit(np.arange(n_train), np.arange(n_train, len(ds)), seed)
    ds.meta = {"perturbation": perturbation, "N": N, "seed": seed, "lambda0": lambda0, "lambdas": lams, "pauli": pauli}
    return ds


def build_chain_grid(
    perturbation: str,
    lambdas: Sequence[float],
    per_lambda: int,
    seed: int = 0,
    N: int = 13,
    states_per_draw: int = 1,
    train_frac: float = TRAIN_FRACTION,
    jobs: int = 1,
    pauli: bool = False,
) -> LabeledSet:
    """Unlabeled samples on a lambda grid, each lambda split 70/30 by draw."""
    parts = []
    for lam in lambdas:
        p = chain_samples(
            perturbation, float(lam), per_lambda, seed, 2, N=N, states_per_draw=states_per_draw, jobs=jobs, pauli=pauli
        )
        k = int(round(train_frac * per_lambda))
        p.split = DatasetSplit(np.arange(k), np.arange(k, per_lambda), seed)
        parts.append(p)
    ds = concat(parts)
    ds.meta = {"perturbation": perturbation, "N": N, "seed": seed, "lambdas": [float(l) for l in lambdas], "pauli": pauli}
    return ds
