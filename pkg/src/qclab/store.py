"""Disk cache of solver outputs keyed by their full parameter set.

Billiard solves at n_grid ~ 300 take about a minute each; downstream stages
(datasets, scans) reuse them through :func:`billiard_solution`.  The cache
root is ``$QCLAB_CACHE`` or ``~/.cache/qclab``.
"""

from __future__ import annotations

import logging
import os
from pathlib import Path

from . import billiards
from .billiards import BilliardShape

log = logging.getLogger(__name__)

DEFAULT_N_LEVELS = 500
DEFAULT_STATES = (300, 500)
MIN_N_GRID = 300


def cache_root() -> Path:
    root = os.environ.get("QCLAB_CACHE")
    return Path(root) if root else Path.home() / ".cache" / "qclab"


def billiard_key(kind: str, lam: float, n_grid: int, n_levels: int, states: tuple, seed: int) -> str:
    return f"{kind}_lam{lam:.4f}_g{n_grid}_n{n_levels}_st{states[0]}-{states[1]}_s{seed}"


def default_n_grid(shape: BilliardShape, n_levels: int) -> int:
    return max(MIN_N_GRID, billiards.required_n_grid(shape, n_levels))


def billiard_solution(
    kind: str,
    lam: float,
    n_grid: int | None = None,
    n_levels: int = DEFAULT_N_LEVELS,
    states: tuple = DEFAULT_STATES,
    seed: int = 0,
    root: Path | None = None,
) -> billiards.BilliardSolution:
    """Load a cached solution or solve and store it (eigenvectors for
    ``states`` only)."""
    shape = BilliardShape(kind, lam)
    if n_grid is None:
        n_grid = default_n_grid(shape, n_levels)
    d = (root or cache_root()) / "billiards" / billiard_key(kind, lam, n_grid, n_levels, states, seed)
    if (d / "solution.json").exists():
        return billiards.load_solution(d)
    log.info("cache miss: %s", d.name)
    sol = billiards.solve_billiard(shape, n_grid, n_levels, seed=seed)
    billiards.save_solution(sol, d, states=states)
    return billiards.load_solution(d)
