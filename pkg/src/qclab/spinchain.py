"""Open XXZ chain with next-nearest-neighbor or central-impurity
perturbations, resolved into magnetization and reflection-parity sectors.

Site ``i`` (0-based) is bit ``i`` of the configuration integer; a set bit is
spin up.  Spin operators are ``S = sigma/2`` unless ``pauli=True``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.sparse

from . import arrayio
from .errors import ConsistencyError, ValidationError
from .linalg import EigenPairs, SymmetricOperator, dense_sym_eig
from .rng import RngStream

log = logging.getLogger(__name__)

PERTURBATIONS = ("nnn", "impurity")


@dataclass(frozen=True)
class ChainParams:
    N: int
    Jzz: float = 1.0
    perturbation: str = "nnn"
    lam: float = 0.0
    J: float = 1.0
    pauli: bool = False  # spin operators sigma instead of sigma/2

    def __post_init__(self):
        if self.N < 2:
            raise ValidationError(f"need N >= 2, got {self.N}")
        if self.perturbation not in PERTURBATIONS:
            raise ValidationError(f"perturbation must be one of {PERTURBATIONS}")
        if not self.Jzz > 0:
            raise ValidationError(f"Jzz must be positive, got {self.Jzz}")
        if self.lam < 0:
            raise ValidationError(f"lambda must be >= 0, got {self.lam}")

    @property
    def spin(self) -> float:
        return 1.0 if self.pauli else 0.5

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "Jzz": self.Jzz,
            "perturbation": self.perturbation,
            "lambda": self.lam,
            "J": self.J,
            "pauli": self.pauli,
        }


def reverse_bits(states: np.ndarray, N: int) -> np.ndarray:
    states = np.asarray(states, dtype=np.int64)
    out = np.zeros_like(states)
    for i in range(N):
        out |= ((states >> i) & 1) << (N - 1 - i)
    return out


def configurations(N: int, n_up: Optional[int] = None) -> np.ndarray:
    """All configurations (ascending) with ``n_up`` set bits, or all 2^N."""
    if n_up is None:
        return np.arange(1 << N, dtype=np.int64)
    states = [sum(1 << i for i in c) for c in itertools.combinations(range(N), n_up)]
    return np.array(sorted(states), dtype=np.int64)


@dataclass
class SectorBasis:
    """Symmetry-adapted basis.  ``states`` are orbit representatives (the
    smaller of a configuration and its mirror image), ascending; ``norms`` are
    the coefficients of the representative in the normalized basis vector.
    ``parity`` is +1, -1, or 0 for no reflection reduction."""

    N: int
    n_up: Optional[int]
    parity: int
    states: np.ndarray
    norms: np.ndarray
    raw_states: np.ndarray
    projector: scipy.sparse.csr_matrix  # raw -> sector, columns orthonormal

    @property
    def dimension(self) -> int:
        return len(self.states)

    @property
    def raw_dimension(self) -> int:
        return len(self.raw_states)

    @property
    def m_z(self) -> Optional[float]:
        return None if self.n_up is None else (2 * self.n_up - self.N) / 2


def sector_basis(N: int, n_up: Optional[int] = None, parity: int = 1) -> SectorBasis:
    """General sector constructor (any ``n_up``, parity +1/-1, or 0 for none)."""
    if n_up is not None and not 0 <= n_up <= N:
        raise ValidationError(f"n_up must be in 0..{N}, got {n_up}")
    if parity not in (-1, 0, 1):
        raise ValidationError("parity must be +1, -1 or 0")
    raw = configurations(N, n_up)
    if parity == 0:
        proj = scipy.sparse.identity(len(raw), format="csr")
        return SectorBasis(N, n_up, 0, raw, np.ones(len(raw)), raw, proj)
    mirror = reverse_bits(raw, N)
    rep = np.minimum(raw, mirror)
    palindrome = raw == mirror
    if parity == 1:
        reps = np.unique(rep)
    else:
        reps = np.unique(rep[~palindrome])
    if len(reps) == 0:  # e.g. odd parity of a fully polarized sector
        proj = scipy.sparse.csr_matrix((len(raw), 0))
        return SectorBasis(N, n_up, parity, reps, np.ones(0), raw, proj)
    pal_rep = np.isin(reps, raw[palindrome])
    norms = np.where(pal_rep, 1.0, 1.0 / math.sqrt(2.0))
    col = np.searchsorted(reps, rep)
    valid = (col < len(reps)) & (reps[np.minimum(col, len(reps) - 1)] == rep)
    if parity == -1:
        valid &= ~palindrome
    coef = np.where(palindrome, 1.0, 1.0 / math.sqrt(2.0))
    if parity == -1:
        coef = np.where(raw == rep, coef, -coef)
    rows = np.nonzero(valid)[0]
    proj = scipy.sparse.csr_matrix((coef[rows], (rows, col[rows])), shape=(len(raw), len(reps)))
    return SectorBasis(N, n_up, parity, reps, norms, raw, proj)


def build_basis(N: int, n_up: int) -> SectorBasis:
    """Reflection-even basis of the lowest-magnetization sector ``m_z = 1/2``."""
    if N % 2 == 0:
        raise ValidationError(f"N must be odd, got {N}")
    if n_up != (N + 1) // 2:
        raise ValidationError(f"n_up must be (N+1)/2 = {(N + 1) // 2} for m_z = 1/2, got {n_up}")
    return sector_basis(N, n_up, parity=1)


def raw_hamiltonian(params: ChainParams, states: np.ndarray) -> scipy.sparse.csr_matrix:
    """Hamiltonian on an explicit list of configurations closed under the
    spin-exchange moves (a magnetization sector or the full space)."""
    N = params.N
    s = params.spin
    states = np.asarray(states, dtype=np.int64)
    D = len(states)
    bits = ((states[:, None] >> np.arange(N)) & 1).astype(float)
    sz = s * (2 * bits - 1)
    diag = params.Jzz * np.sum(sz[:, :-1] * sz[:, 1:], axis=1)
    if params.lam != 0.0:
        if params.perturbation == "nnn":
            diag = diag + params.lam * np.sum(sz[:, :-2] * sz[:, 2:], axis=1)
        else:
            if N % 2 == 0:
                raise ValidationError("impurity perturbation needs odd N")
            diag = diag + params.lam * sz[:, (N - 1) // 2]
    rows, cols, vals = [np.arange(D)], [np.arange(D)], [diag]
    # J (SxSx + SySy) = (J/2)(S+S- + S-S+); matrix element J s^2 * 2 for antiparallel pairs
    hop = params.J * 2 * s * s
    for i in range(N - 1):
        m = (1 << i) | (1 << (i + 1))
        anti = ((states >> i) & 1) != ((states >> (i + 1)) & 1)
        src = np.nonzero(anti)[0]
        dst_states = states[src] ^ m
        dst = np.searchsorted(states, dst_states)
        if np.any(states[np.minimum(dst, D - 1)] != dst_states):
            raise ConsistencyError("state list not closed under spin exchange")
        rows.append(dst)
        cols.append(src)
        vals.append(np.full(len(src), hop))
    return scipy.sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(D, D)
    )


def reflection_operator(states: np.ndarray, N: int) -> scipy.sparse.csr_matrix:
    states = np.asarray(states, dtype=np.int64)
    idx = np.searchsorted(states, reverse_bits(states, N))
    D = len(states)
    return scipy.sparse.csr_matrix((np.ones(D), (idx, np.arange(D))), shape=(D, D))


def commutator_defect(a, b, rng: RngStream, probes: int = 5) -> float:
    """max ||[A,B] x|| / (||A|| ||B|| ||x||) over random probes."""
    na = max(abs(a).sum(axis=1).max(), 1e-300)
    nb = max(abs(b).sum(axis=1).max(), 1e-300)
    worst = 0.0
    for _ in range(probes):
        x = rng.normal(a.shape[0])
        c = a @ (b @ x) - b @ (a @ x)
        worst = max(worst, np.linalg.norm(c) / (na * nb * np.linalg.norm(x)))
    return worst


def check_symmetries(params: ChainParams, seed: int = 0, tol: float = 1e-10) -> dict:
    """Probe [H, R] and [H, S_z_total] on the full 2^N space."""
    if params.N > 16:
        raise ValidationError("full-space symmetry probe limited to N <= 16")
    rng = RngStream(seed).spawn(params.N)
    states = configurations(params.N)
    h = raw_hamiltonian(params, states)
    r = reflection_operator(states, params.N)
    bits = ((states[:, None] >> np.arange(params.N)) & 1).sum(axis=1)
    sz = scipy.sparse.diags(bits - params.N / 2.0).tocsr()
    out = {"reflection": commutator_defect(h, r, rng), "sz_total": commutator_defect(h, sz, rng)}
    for name, d in out.items():
        if d > tol:
            raise ConsistencyError(f"Hamiltonian breaks {name} symmetry (defect {d:.2e})")
    return out


def build_hamiltonian(params: ChainParams, basis: SectorBasis, check: bool = True) -> SymmetricOperator:
    """Dense Hamiltonian in the symmetry-adapted basis."""
    if basis.N != params.N:
        raise ValidationError(f"basis is for N={basis.N}, params for N={params.N}")
    if check and params.N <= 16 and basis.parity != 0:
        check_symmetries(params)
    h_raw = raw_hamiltonian(params, basis.raw_states)
    p = basis.projector
    if basis.parity != 0 and check:
        r = reflection_operator(basis.raw_states, params.N)
        d = commutator_defect(h_raw, r, RngStream(1))
        if d > 1e-10:
            raise ConsistencyError(f"reflection defect {d:.2e} in sector")
    h = (p.T @ h_raw @ p).toarray()
    h = 0.5 * (h + h.T)
    return SymmetricOperator.from_matrix(h)


@dataclass
class ChainSolution:
    params: ChainParams
    basis: SectorBasis
    eigenpairs: EigenPairs
    seed: int = 0

    @property
    def energies(self) -> np.ndarray:
        return self.eigenpairs.values

    def probabilities(self, n: int) -> np.ndarray:
        v = self.eigenpairs.vectors[:, n]
        return v * v

    def sidecar(self) -> dict:
        return {
            "N": self.params.N,
            "Jzz": self.params.Jzz,
            "perturbation": self.params.perturbation,
            "lambda": self.params.lam,
            "pauli": self.params.pauli,
            "sector": {"n_up": self.basis.n_up, "m_z": self.basis.m_z, "parity": self.basis.parity},
            "dimension": self.basis.dimension,
            "seed": self.seed,
        }


def solve_chain(params: ChainParams, seed: int = 0, check: bool = False) -> ChainSolution:
    basis = build_basis(params.N, (params.N + 1) // 2)
    op = build_hamiltonian(params, basis, check=check)
    return ChainSolution(params, basis, dense_sym_eig(op), seed=seed)


def mid_spectrum_states(solution, count: int):
    """Indices of the ``count`` eigenstates closest to the spectral median,
    nearest first."""
    e = solution.energies if hasattr(solution, "energies") else np.asarray(solution)
    if not 0 < count <= len(e):
        raise ValidationError(f"count must be in 1..{len(e)}")
    med = float(np.median(e))
    order = np.argsort(np.abs(e - med), kind="stable")
    return order[:count]


def save_chain(sol: ChainSolution, directory) -> None:
    d = Path(directory)
    arrayio.write_array(d / "eigenvalues.qarr", sol.energies)
    arrayio.write_array(d / "eigenvectors.qarr", sol.eigenpairs.vectors)
    arrayio.write_json(d / "solution.json", sol.sidecar())


def load_chain(directory) -> ChainSolution:
    d = Path(directory)
    meta = arrayio.read_json(d / "solution.json")
    params = ChainParams(
        N=meta["N"], Jzz=meta["Jzz"], perturbation=meta["perturbation"], lam=meta["lambda"], pauli=meta.get("pauli", False)
    )
    basis = build_basis(params.N, meta["sector"]["n_up"])
    values = arrayio.read_array(d / "eigenvalues.qarr")
    vectors = arrayio.read_array(d / "eigenvectors.qarr")
    return ChainSolution(params, basis, EigenPairs(values, vectors), seed=meta.get("seed", 0))
