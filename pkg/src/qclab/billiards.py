"""Billiard geometries and the finite-difference Dirichlet eigenproblem.

Units are hbar = m = 1, so the Hamiltonian is ``-(1/2) Laplacian`` and an
eigenvalue ``E`` corresponds to wavenumber ``k = sqrt(2 E)``.

Each geometry is reduced to a symmetry segment with Dirichlet walls on the
mirror lines, so that no exact parity degeneracies survive:

* ``sinai``: the quarter ``[0, a_x] x [0, a_y]`` (``a_x/a_y = sqrt(5)/2``) of a
  ``2 a_x x 2 a_y`` rectangle whose centered disk has radius
  ``r = lambda * 2 a_x``; the quarter disk therefore sits in the corner at the
  origin.  ``lambda = 0`` is the plain rectangle.
* ``stadium``: quarter of a Bunimovich stadium with radius ``r`` and full
  straight length ``l = lambda * r``.
* ``pascal``: upper half (``y > 0``) of the image of the unit disk under
  ``w = z + lambda z**2``.  The boundary is a 4096-gon and membership uses the
  even-odd rule, so for ``lambda > 1/2`` the inner loop is excluded.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse

from . import arrayio
from .errors import GeometryError, ResolutionError, ValidationError
from .linalg import EigenPairs, sparse_lowest

log = logging.getLogger(__name__)

KINDS = ("sinai", "stadium", "pascal")
SINAI_AX = math.sqrt(5.0) / 2.0
SINAI_AY = 1.0
PASCAL_SEGMENTS = 4096
MAX_LEVELS = 600
MAX_KH = 0.5


@dataclass(frozen=True)
class BilliardShape:
    kind: str
    lam: float
    a_x: float = SINAI_AX
    a_y: float = SINAI_AY
    radius: float = 1.0  # stadium radius
    disk_center: tuple = (0.0, 0.0)  # sinai, in quarter-domain coordinates

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown billiard kind {self.kind!r}; expected one of {KINDS}")
        lam = self.lam
        if not math.isfinite(lam) or lam < 0:
            raise ValidationError(f"lambda must be finite and >= 0, got {lam}")
        if self.kind == "sinai":
            if lam >= 0.5:
                raise ValidationError(f"sinai lambda must be < 0.5, got {lam}")
            if lam > 0 and self.disk_radius >= self.a_y:
                raise GeometryError(
                    f"sinai disk radius {self.disk_radius:.4f} reaches the wall a_y={self.a_y}"
                )
        if self.kind == "pascal" and lam > 1:
            raise ValidationError(f"pascal lambda must be <= 1, got {lam}")

    @property
    def disk_radius(self) -> float:
        return self.lam * 2.0 * self.a_x

    @property
    def straight(self) -> float:
        """Half of the stadium straight section (the part in the quarter)."""
        return 0.5 * self.lam * self.radius

    def bounding_box(self):
        if self.kind == "sinai":
            return 0.0, self.a_x, 0.0, self.a_y
        if self.kind == "stadium":
            return 0.0, self.straight + self.radius, 0.0, self.radius
        px, py = pascal_polygon(self.lam)
        return float(px.min()), float(px.max()), 0.0, float(py.max())

    def area(self) -> float:
        if self.kind == "sinai":
            r = self.disk_radius
            return self.a_x * self.a_y - math.pi * r * r / 4.0
        if self.kind == "stadium":
            r = self.radius
            return self.straight * r + math.pi * r * r / 4.0
        return pascal_area(self.lam) / 2.0

    def perimeter(self) -> float:
        if self.kind == "sinai":
            r = self.disk_radius
            return 2 * self.a_x + 2 * self.a_y - 2 * r + math.pi * r / 2.0
        if self.kind == "stadium":
            r = self.radius
            return 2 * self.straight + r + r + math.pi * r / 2.0
        px, py = pascal_polygon(self.lam)
        upper = py >= 0
        xs, ys = px[upper], py[upper]
        arc = float(np.hypot(np.diff(xs), np.diff(ys)).sum())
        return arc + (1 + self.lam) - (-1 + self.lam)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "lambda": self.lam,
            "a_x": self.a_x,
            "a_y": self.a_y,
            "radius": self.radius,
            "disk_center": list(self.disk_center),
        }


def pascal_area(lam: float) -> float:
    """Area of the full limacon.  For ``lam <= 1/2`` the map is univalent and
    the area is ``pi (1 + 2 lam^2)``; beyond that the even-odd region is
    measured on a fine scanline raster."""
    if lam <= 0.5:
        return math.pi * (1 + 2 * lam * lam)
    px, py = pascal_polygon(lam)
    g = 2000
    xs = np.linspace(px.min(), px.max(), g)
    ys = np.linspace(py.min(), py.max(), g)
    mask = _scanline_mask(px, py, xs, ys)
    return float(mask.mean() * (px.max() - px.min()) * (py.max() - py.min()))


_POLY_CACHE: dict = {}


def pascal_polygon(lam: float, segments: int = PASCAL_SEGMENTS):
    key = (float(lam), segments)
    if key not in _POLY_CACHE:
        t = 2 * np.pi * np.arange(segments) / segments
        z = np.exp(1j * t)
        w = z + lam * z * z
        _POLY_CACHE[key] = (w.real.copy(), w.imag.copy())
    return _POLY_CACHE[key]


def _even_odd(px, py, x, y) -> np.ndarray:
    """Even-odd point-in-polygon test by horizontal ray casting."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    x1, y1 = px, py
    x2, y2 = np.roll(px, -1), np.roll(py, -1)
    inside = np.zeros(x.shape, dtype=bool)
    for i in range(len(x)):
        cond = (y1 > y[i]) != (y2 > y[i])
        xc = x1[cond] + (y[i] - y1[cond]) * (x2[cond] - x1[cond]) / (y2[cond] - y1[cond])
        inside[i] = np.count_nonzero(xc > x[i]) % 2 == 1
    return inside


def _scanline_mask(px, py, xs, ys) -> np.ndarray:
    """Even-odd fill of a polygon sampled on the grid ``xs x ys``."""
    x1, y1 = px, py
    x2, y2 = np.roll(px, -1), np.roll(py, -1)
    mask = np.zeros((len(ys), len(xs)), dtype=bool)
    for j, y in enumerate(ys):
        cond = (y1 > y) != (y2 > y)
        if not cond.any():
            continue
        xc = np.sort(x1[cond] + (y - y1[cond]) * (x2[cond] - x1[cond]) / (y2[cond] - y1[cond]))
        # crossings strictly to the right of each x, parity decides membership
        right = len(xc) - np.searchsorted(xc, xs, side="right")
        mask[j] = (right % 2 == 1) & ~np.isin(xs, xc)
    return mask


def inside(shape: BilliardShape, x, y):
    """Strict membership in the symmetry-reduced domain.  Vectorized over
    array ``x``, ``y``; returns a bool (or bool array)."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    scalar = xa.ndim == 0 and ya.ndim == 0
    xa, ya = np.broadcast_arrays(np.atleast_1d(xa), np.atleast_1d(ya))
    if shape.kind == "sinai":
        res = (xa > 0) & (xa < shape.a_x) & (ya > 0) & (ya < shape.a_y)
        r = shape.disk_radius
        if r > 0:
            cx, cy = shape.disk_center
            res &= (xa - cx) ** 2 + (ya - cy) ** 2 > r * r
    elif shape.kind == "stadium":
        r, s = shape.radius, shape.straight
        box = (xa > 0) & (xa < s) & (ya > 0) & (ya < r)
        cap = (xa >= s) & (ya > 0) & ((xa - s) ** 2 + ya**2 < r * r)
        res = box | cap
    else:
        px, py = pascal_polygon(shape.lam)
        res = (ya > 0) & _even_odd(px, py, xa.ravel(), ya.ravel()).reshape(xa.shape)
    return bool(res[0]) if scalar else res


@dataclass
class GridDomain:
    h: float
    x0: float
    y0: float
    mask: np.ndarray  # (ny, nx) bool
    index: np.ndarray  # (ny, nx) int, -1 outside
    laplacian: scipy.sparse.csr_matrix = field(repr=False)  # -(1/2) Laplacian on interior points

    @property
    def n_interior(self) -> int:
        return int(self.mask.sum())

    @property
    def shape(self):
        return self.mask.shape

    def coordinates(self):
        ny, nx = self.mask.shape
        return self.x0 + self.h * np.arange(nx), self.y0 + self.h * np.arange(ny)

    def to_field(self, vector: np.ndarray) -> np.ndarray:
        """Scatter an interior vector onto the full lattice (zeros outside)."""
        out = np.zeros(self.mask.shape, dtype=np.asarray(vector).dtype)
        out[self.mask] = vector
        return out


def grid_mask(shape: BilliardShape, n_grid: int):
    x0, x1, y0, y1 = shape.bounding_box()
    h = (x1 - x0) / (n_grid - 1)
    ny = int(math.ceil((y1 - y0) / h - 1e-9)) + 1
    xs = x0 + h * np.arange(n_grid)
    ys = y0 + h * np.arange(ny)
    if shape.kind == "pascal":
        px, py = pascal_polygon(shape.lam)
        mask = _scanline_mask(px, py, xs, ys) & (ys[:, None] > 0)
    else:
        X, Y = np.meshgrid(xs, ys)
        mask = inside(shape, X, Y)
    return h, x0, y0, mask


def discretize(shape: BilliardShape, n_grid: int) -> GridDomain:
    """Five-point Dirichlet Laplacian (times -1/2) on the interior lattice
    points; exterior neighbors are dropped, which imposes psi = 0 there."""
    if n_grid < 32:
        raise ValidationError(f"n_grid must be >= 32, got {n_grid}")
    h, x0, y0, mask = grid_mask(shape, n_grid)
    n = int(mask.sum())
    if n == 0:
        raise GeometryError(f"{shape.kind} lambda={shape.lam}: empty interior at n_grid={n_grid}")
    index = np.full(mask.shape, -1, dtype=np.int64)
    index[mask] = np.arange(n)
    rows = [np.arange(n)]
    cols = [np.arange(n)]
    vals = [np.full(n, 2.0 / h**2)]
    off = -0.5 / h**2
    src = index[mask]
    jj, ii = np.nonzero(mask)
    padded = np.pad(index, 1, constant_values=-1)
    for dj, di in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        nb = padded[jj + 1 + dj, ii + 1 + di]
        ok = nb >= 0
        rows.append(src[ok])
        cols.append(nb[ok])
        vals.append(np.full(int(ok.sum()), off))
    lap = scipy.sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    return GridDomain(h=h, x0=x0, y0=y0, mask=mask, index=index, laplacian=lap)


def required_n_grid(shape: BilliardShape, n_levels: int, max_kh: float = MAX_KH) -> int:
    """Smallest grid keeping ``k h <= max_kh`` at level ``n_levels`` (area Weyl estimate)."""
    k_top = math.sqrt(4 * math.pi * n_levels / shape.area())
    x0, x1, _, _ = shape.bounding_box()
    return int(math.ceil((x1 - x0) * k_top / max_kh)) + 1


@dataclass
class BilliardSolution:
    shape: BilliardShape
    grid: GridDomain
    eigenpairs: EigenPairs  # vectors normalized to sum |psi|^2 h^2 = 1
    n_grid: int
    seed: int = 0
    first_state: int = 0  # index of the first stored eigenvector

    @property
    def energies(self) -> np.ndarray:
        return self.eigenpairs.values

    def field(self, n: int) -> np.ndarray:
        """Eigenfunction ``n`` (0-based, ascending energy) on the full lattice."""
        j = n - self.first_state
        if not 0 <= j < self.eigenpairs.vectors.shape[1]:
            raise ValidationError(f"state {n} not stored (have {self.first_state}..)")
        return self.grid.to_field(self.eigenpairs.vectors[:, j])

    def sidecar(self) -> dict:
        return {
            "kind": self.shape.kind,
            "lambda": self.shape.lam,
            "n_grid": self.n_grid,
            "n_levels": len(self.energies),
            "seed": self.seed,
            "eigenvalues": self.energies,
            "h": self.grid.h,
            "first_state": self.first_state,
            "stored_states": int(self.eigenpairs.vectors.shape[1]),
            "shape": self.shape.to_dict(),
        }


def solve_billiard(
    shape: BilliardShape,
    n_grid: int,
    n_levels: int,
    seed: int = 0,
    tol: float = 1e-10,
) -> BilliardSolution:
    """Lowest ``n_levels`` Dirichlet eigenpairs of ``-(1/2) Laplacian``."""
    if not 0 < n_levels <= MAX_LEVELS:
        raise ValidationError(f"n_levels must be in 1..{MAX_LEVELS}, got {n_levels}")
    need = required_n_grid(shape, n_levels)
    if n_grid < need:
        raise ResolutionError(
            f"n_grid={n_grid} too coarse for {n_levels} levels of {shape.kind} "
            f"lambda={shape.lam}: need n_grid >= {need}",
            required_n_grid=need,
        )
    grid = discretize(shape, n_grid)
    if n_levels >= grid.n_interior:
        raise ResolutionError(f"only {grid.n_interior} interior points", required_n_grid=need)
    log.info("solving %s lambda=%g: %d unknowns, %d levels", shape.kind, shape.lam, grid.n_interior, n_levels)
    pairs = sparse_lowest(grid.laplacian, n_levels, tol=tol, seed=seed)
    vecs = pairs.vectors / grid.h
    # sign convention: largest-magnitude component positive
    idx = np.abs(vecs).argmax(axis=0)
    vecs *= np.sign(vecs[idx, np.arange(vecs.shape[1])])
    return BilliardSolution(shape, grid, EigenPairs(pairs.values, vecs), n_grid=n_grid, seed=seed)


def weyl_count(shape: BilliardShape, energies) -> np.ndarray:
    """Two-term Weyl estimate of the Dirichlet staircase at energies ``E``."""
    k = np.sqrt(2.0 * np.asarray(energies, dtype=float))
    return (shape.area() * k**2 - shape.perimeter() * k) / (4 * math.pi)


def save_solution(sol: BilliardSolution, directory, states: Optional[tuple] = None) -> None:
    """Write eigenvalues, mask and (a window of) eigenvectors plus the JSON sidecar."""
    from pathlib import Path

    d = Path(directory)
    lo, hi = states if states is not None else (sol.first_state, sol.first_state + sol.eigenpairs.vectors.shape[1])
    j0, j1 = lo - sol.first_state, hi - sol.first_state
    arrayio.write_array(d / "eigenvalues.qarr", sol.energies)
    arrayio.write_array(d / "mask.qarr", sol.grid.mask.astype(np.float64))
    arrayio.write_array(d / "eigenvectors.qarr", sol.eigenpairs.vectors[:, j0:j1])
    meta = sol.sidecar()
    meta["first_state"] = lo
    meta["stored_states"] = hi - lo
    arrayio.write_json(d / "solution.json", meta)


def load_solution(directory) -> BilliardSolution:
    from pathlib import Path

    d = Path(directory)
    meta = arrayio.read_json(d / "solution.json")
    s = meta["shape"]
    shape = BilliardShape(
        kind=s["kind"],
        lam=s["lambda"],
        a_x=s["a_x"],
        a_y=s["a_y"],
        radius=s["radius"],
        disk_center=tuple(s["disk_center"]),
    )
    grid = discretize(shape, meta["n_grid"])
    mask = arrayio.read_array(d / "mask.qarr").astype(bool)
    if not np.array_equal(mask, grid.mask):
        raise ValidationError(f"{d}: stored mask does not match the rebuilt grid")
    values = arrayio.read_array(d / "eigenvalues.qarr")
    vectors = arrayio.read_array(d / "eigenvectors.qarr")
    return BilliardSolution(
        shape,
        grid,
        EigenPairs(values, vectors),
        n_grid=meta["n_grid"],
        seed=meta.get("seed", 0),
        first_state=meta.get("first_state", 0),
    )
