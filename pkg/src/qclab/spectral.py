"""Level statistics: unfolding, spacing histograms, KL distance to the
Poisson and Wigner-Dyson laws, the consecutive-gap ratio and the
KL-equidistance critical point."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NoCrossingError, ValidationError

log = logging.getLogger(__name__)

R_POISSON = 2 * math.log(2) - 1  # 0.3863
R_GOE = 0.5307  # Atas et al. large-N value

DEFAULT_DEGREE = 5
DEFAULT_TRIM = 0.05
DEFAULT_BIN_WIDTH = 0.25
DEFAULT_RANGE = (0.0, 4.0)


@dataclass(frozen=True)
class UnfoldedSpectrum:
    spacings: np.ndarray
    degree: int
    level_range: tuple  # (first, last) index into the deduplicated input


def deduplicate(levels, rel_tol: float = 1e-12) -> np.ndarray:
    e = np.sort(np.asarray(levels, dtype=float))
    if len(e) < 2:
        return e
    scale = max(np.abs(e).max(), 1.0)
    keep = np.concatenate([[True], np.diff(e) > rel_tol * scale])
    return e[keep]


def unfold(levels, degree: int = DEFAULT_DEGREE, trim: float = DEFAULT_TRIM) -> UnfoldedSpectrum:
    """Map levels through a polynomial fit of the staircase ``N(E)``.

    ``trim`` drops that fraction of levels at each spectral edge before the
    fit.  Spacings are finally rescaled to mean exactly one.
    """
    e = deduplicate(levels)
    cut = int(math.floor(trim * len(e)))
    first, last = cut, len(e) - cut
    e = e[first:last]
    if len(e) < degree + 2:
        raise ValidationError(f"need at least {degree + 2} distinct levels, got {len(e)}")
    staircase = np.arange(len(e), dtype=float)
    poly = np.polynomial.Polynomial.fit(e, staircase, degree)
    s = np.diff(poly(e))
    if np.any(s < 0):
        log.warning("unfolding map not monotone on %d spacings; clipped at 0", int((s < 0).sum()))
        s = np.clip(s, 0.0, None)
    s = s / s.mean()
    return UnfoldedSpectrum(s, degree, (first, last - 1))


@dataclass(frozen=True)
class SpacingHistogram:
    edges: np.ndarray
    masses: np.ndarray  # per bin, fraction of all spacings
    overflow: float = 0.0  # fraction beyond the last edge

    @property
    def width(self) -> np.ndarray:
        return np.diff(self.edges)

    def density(self) -> np.ndarray:
        return self.masses / self.width


def spacing_histogram(spacings, width: float = DEFAULT_BIN_WIDTH, srange=DEFAULT_RANGE) -> SpacingHistogram:
    s = np.asarray(spacings, dtype=float)
    if s.size == 0:
        raise ValidationError("no spacings to histogram")
    lo, hi = srange
    nb = int(round((hi - lo) / width))
    edges = lo + width * np.arange(nb + 1)
    counts, _ = np.histogram(s, bins=edges)
    over = np.count_nonzero(s > edges[-1])
    return SpacingHistogram(edges, counts / s.size, over / s.size)


class ReferenceDistribution:
    """Poisson ``exp(-s)`` or Wigner-Dyson ``(pi/2) s exp(-pi s^2/4)``."""

    def __init__(self, kind: str):
        if kind not in ("poisson", "wd"):
            raise ValidationError(f"unknown reference {kind!r}")
        self.kind = kind

    def __repr__(self):
        return f"ReferenceDistribution({self.kind!r})"

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "poisson":
            return np.exp(-s)
        return 0.5 * np.pi * s * np.exp(-0.25 * np.pi * s * s)

    def survival(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "poisson":
            return np.exp(-s)
        return np.exp(-0.25 * np.pi * s * s)

    def bin_masses(self, edges) -> np.ndarray:
        sv = self.survival(edges)
        return sv[:-1] - sv[1:]


POISSON = ReferenceDistribution("poisson")
WIGNER_DYSON = ReferenceDistribution("wd")


def kl_divergence(hist: SpacingHistogram, ref: ReferenceDistribution | np.ndarray) -> float:
    """Binned ``sum p ln(p/q)``.

    The overflow bin ``(s_max, inf)`` takes part on both sides so that ``p``
    and ``q`` are both normalized and the result is non-negative.  ``ref`` is
    a reference law or an explicit array of bin masses (without overflow).
    """
    p = np.append(hist.masses, hist.overflow)
    if p.sum() <= 0:
        raise ValidationError("empty histogram")
    if isinstance(ref, ReferenceDistribution):
        q = np.append(ref.bin_masses(hist.edges), ref.survival(hist.edges[-1]))
    else:
        q = np.asarray(ref, dtype=float)
        q = np.append(q, max(0.0, 1.0 - q.sum())) if len(q) == len(hist.masses) else q
    nz = p > 0
    if np.any(q[nz] <= 0):
        raise AssertionError("reference mass vanishes where the histogram has mass")
    return float(np.sum(p[nz] * np.log(p[nz] / q[nz])))


def r_values(levels):
    """Gap ratios ``min/max`` of consecutive spacings; returns ``(r, n_excluded)``."""
    e = np.sort(np.asarray(levels, dtype=float))
    if len(e) < 3:
        raise ValidationError("need at least 3 levels")
    d = np.diff(e)
    a, b = d[:-1], d[1:]
    hi = np.maximum(a, b)
    ok = hi > 0
    return np.minimum(a, b)[ok] / hi[ok], int((~ok).sum())


def r_ratio(levels) -> float:
    """Mean consecutive-gap ratio <r>; unfolding-free."""
    r, excluded = r_values(levels)
    if excluded:
        log.warning("r_ratio: excluded %d doubly-degenerate spacing pairs", excluded)
    if r.size == 0:
        raise ValidationError("all spacing pairs degenerate")
    return float(r.mean())


@dataclass(frozen=True)
class LevelStats:
    n_levels: int
    r_mean: float
    kl_poisson: float
    kl_wd: float
    histogram: SpacingHistogram

    @property
    def closer_to(self) -> str:
        return "poisson" if self.kl_poisson < self.kl_wd else "wd"


def level_statistics(
    levels,
    degree: int = DEFAULT_DEGREE,
    trim: float = DEFAULT_TRIM,
    width: float = DEFAULT_BIN_WIDTH,
    srange=DEFAULT_RANGE,
) -> LevelStats:
    e = deduplicate(levels)
    u = unfold(e, degree=degree, trim=trim)
    hist = spacing_histogram(u.spacings, width=width, srange=srange)
    first, last = u.level_range
    return LevelStats(
        n_levels=len(e),
        r_mean=r_ratio(e[first : last + 1]),
        kl_poisson=kl_divergence(hist, POISSON),
        kl_wd=kl_divergence(hist, WIGNER_DYSON),
        histogram=hist,
    )


def kl_difference(hist: SpacingHistogram) -> float:
    return kl_divergence(hist, POISSON) - kl_divergence(hist, WIGNER_DYSON)


def kl_critical_point(curve: Sequence[tuple]) -> float:
    """Parameter where ``D(P||Pois) - D(P||WD)`` crosses zero (linear
    interpolation between the bracketing points)."""
    if len(curve) < 3:
        raise ValidationError("need at least 3 points")
    pts = sorted(curve, key=lambda t: t[0])
    lam = np.array([p[0] for p in pts], dtype=float)
    diff = np.array([kl_difference(p[1]) if isinstance(p[1], SpacingHistogram) else float(p[1]) for p in pts])
    table = list(zip(lam.tolist(), diff.tolist()))
    if np.sign(diff[0]) == np.sign(diff[-1]) and diff[0] != 0 and diff[-1] != 0:
        raise NoCrossingError("KL difference does not change sign", curve=table)
    for i in range(len(lam)):
        if diff[i] == 0:
            return float(lam[i])
        if i + 1 < len(lam) and np.sign(diff[i]) != np.sign(diff[i + 1]) and diff[i + 1] != 0:
            t = diff[i] / (diff[i] - diff[i + 1])
            return float(lam[i] + t * (lam[i + 1] - lam[i]))
    raise NoCrossingError("KL difference does not change sign", curve=table)
