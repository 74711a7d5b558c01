import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qclab.errors import ValidationError
from qclab.linalg import dense_sym_eig
from qclab.rng import RngStream
from qclab.spectral import r_ratio
from qclab.spinchain import (
    ChainParams,
    build_basis,
    build_hamiltonian,
    check_symmetries,
    configurations,
    load_chain,
    mid_spectrum_states,
    raw_hamiltonian,
    save_chain,
    sector_basis,
    solve_chain,
)


def full_hamiltonian_kron(params):
    """Brute-force 2^N Hamiltonian from Kronecker products of spin-1/2 matrices."""
    N = params.N
    sx = np.array([[0, 1], [1, 0]]) / 2
    sy = np.array([[0, -1j], [1j, 0]]) / 2
    sz = np.array([[-1, 0], [0, 1]]) / 2  # bit 1 = up

    def site(op, i):
        out = np.array([[1.0]])
        for j in reversed(range(N)):  # bit j is the j-th binary digit
            out = np.kron(out, op if j == i else np.eye(2))
        return out

    h = np.zeros((2**N, 2**N), dtype=complex)
    for i in range(N - 1):
        h += params.J * (site(sx, i) @ site(sx, i + 1) + site(sy, i) @ site(sy, i + 1))
        h += params.Jzz * site(sz, i) @ site(sz, i + 1)
    if params.perturbation == "nnn":
        for i in range(N - 2):
            h += params.lam * site(sz, i) @ site(sz, i + 2)
    else:
        h += params.lam * site(sz, (N - 1) // 2)
    assert np.abs(h.imag).max() < 1e-14
    return h.real


def test_basis_three_sites():
    b = build_basis(3, 2)
    assert b.raw_dimension == 3
    assert b.dimension == 2
    assert b.states.tolist() == [0b011, 0b101]
    assert b.m_z == 0.5


def test_basis_fifteen_sites():
    b = build_basis(15, 8)
    assert b.raw_dimension == math.comb(15, 8) == 6435
    assert b.dimension == 3235 == (6435 + 35) // 2


def test_basis_validation():
    with pytest.raises(ValidationError):
        build_basis(13, 6)
    with pytest.raises(ValidationError):
        build_basis(12, 6)
    with pytest.raises(ValidationError):
        sector_basis(5, 7)


def test_basis_orthonormal_projector():
    b = build_basis(9, 5)
    p = b.projector.toarray()
    np.testing.assert_allclose(p.T @ p, np.eye(b.dimension), atol=1e-14)


def test_two_site_heisenberg():
    params = ChainParams(N=2, Jzz=1.0)
    op = build_hamiltonian(params, sector_basis(2, None, parity=0))
    np.testing.assert_allclose(dense_sym_eig(op).values, [-0.75, 0.25, 0.25, 0.25], atol=1e-14)


@pytest.mark.parametrize("N", [5, 7])
def test_polarized_state_impurity_energy(N):
    jzz, lam = 1.3, 0.7
    params = ChainParams(N=N, Jzz=jzz, perturbation="impurity", lam=lam)
    op = build_hamiltonian(params, sector_basis(N, N, parity=0), check=False)
    assert op.dimension == 1
    assert abs(op.dense[0, 0] - (jzz * (N - 1) / 4 + lam / 2)) < 1e-14


@pytest.mark.parametrize("pert", ["nnn", "impurity"])
def test_zero_coupling_equals_xxz(pert):
    basis = build_basis(9, 5)
    a = build_hamiltonian(ChainParams(N=9, Jzz=1.4, perturbation=pert, lam=0.0), basis).dense
    b = build_hamiltonian(ChainParams(N=9, Jzz=1.4, perturbation="nnn", lam=0.0), basis).dense
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("pert", ["nnn", "impurity"])
def test_raw_hamiltonian_matches_kronecker(pert):
    params = ChainParams(N=5, Jzz=1.7, perturbation=pert, lam=0.4)
    h = raw_hamiltonian(params, configurations(5)).toarray()
    np.testing.assert_allclose(h, full_hamiltonian_kron(params), atol=1e-14)


@pytest.mark.parametrize("N,pert", [(5, "nnn"), (7, "impurity"), (8, "nnn"), (7, "nnn")])
def test_sectors_reproduce_full_spectrum(N, pert):
    params = ChainParams(N=N, Jzz=1.2, perturbation=pert, lam=0.35)
    full = np.linalg.eigvalsh(full_hamiltonian_kron(params))
    parts = []
    for n_up in range(N + 1):
        for parity in (1, -1):
            b = sector_basis(N, n_up, parity)
            if b.dimension:
                parts.append(dense_sym_eig(build_hamiltonian(params, b, check=False)).values)
    np.testing.assert_allclose(np.sort(np.concatenate(parts)), full, atol=1e-9)


@settings(max_examples=15, deadline=None)
@given(N=st.integers(3, 9), jzz=st.floats(0.8, 2.0), lam=st.floats(0.0, 1.0), pert=st.sampled_from(["nnn", "impurity"]))
def test_symmetry_commutators_property(N, jzz, lam, pert):
    if pert == "impurity" and N % 2 == 0:
        N += 1
    defects = check_symmetries(ChainParams(N=N, Jzz=jzz, perturbation=pert, lam=lam))
    assert max(defects.values()) <= 1e-10


def test_mid_spectrum_pick():
    assert mid_spectrum_states(np.array([-1.0, 0.0, 5.0]), 1).tolist() == [1]
    order = mid_spectrum_states(np.array([-1.0, 0.0, 5.0]), 3)
    assert sorted(order.tolist()) == [0, 1, 2] and order[0] == 1
    with pytest.raises(ValidationError):
        mid_spectrum_states(np.array([0.0, 1.0]), 3)


@pytest.fixture(scope="module")
def chain13():
    return solve_chain(ChainParams(N=13, Jzz=1.1, perturbation="nnn", lam=0.3))


def test_mid_spectrum_central_band(chain13):
    e = chain13.energies
    idx = mid_spectrum_states(chain13, 50)
    lo, hi = e.min(), e.max()
    med = np.median(e)
    assert np.all(np.abs(e[idx] - med) <= 0.1 * (hi - lo))


def test_probabilities_sum_to_one(chain13):
    for n in mid_spectrum_states(chain13, 20):
        p = chain13.probabilities(n)
        assert abs(p.sum() - 1) < 1e-10 and p.min() >= 0


def test_integrable_r_ratio_below_threshold():
    for jzz in (0.9, 1.5):
        sol = solve_chain(ChainParams(N=13, Jzz=jzz, lam=0.0))
        e = sol.energies
        n = len(e)
        assert r_ratio(e[n // 10 : n - n // 10]) < 0.45


def test_chain_round_trip(tmp_path, chain13):
    save_chain(chain13, tmp_path)
    back = load_chain(tmp_path)
    assert back.params == chain13.params
    np.testing.assert_array_equal(back.eigenpairs.vectors, chain13.eigenpairs.vectors)
    assert back.sidecar()["dimension"] == build_basis(13, 7).dimension


def test_params_validation():
    with pytest.raises(ValidationError):
        ChainParams(N=13, Jzz=-1.0)
    with pytest.raises(ValidationError):
        ChainParams(N=13, perturbation="field")
    with pytest.raises(ValidationError):
        ChainParams(N=13, lam=-0.1)


def test_pauli_flag_scales_spin_terms():
    basis = build_basis(7, 4)
    half = build_hamiltonian(ChainParams(N=7, Jzz=1.0, lam=0.0), basis).dense
    pauli = build_hamiltonian(ChainParams(N=7, Jzz=1.0, lam=0.0, pauli=True), basis).dense
    np.testing.assert_allclose(pauli, 4 * half, atol=1e-14)


def test_rng_independent_solve_determinism(chain13):
    again = solve_chain(ChainParams(N=13, Jzz=1.1, perturbation="nnn", lam=0.3))
    np.testing.assert_array_equal(again.energies, chain13.energies)
    assert RngStream(0).spawn(1).seed == RngStream(0).spawn(1).seed


def test_pauli_impurity_maps_to_half_field():
    # sigma-based couplings scale by 4 and the local field by 2
    a = solve_chain(ChainParams(N=9, Jzz=1.3, perturbation="impurity", lam=0.4, pauli=True))
    b = solve_chain(ChainParams(N=9, Jzz=1.3, perturbation="impurity", lam=0.2))
    np.testing.assert_allclose(a.energies, 4 * b.energies, atol=1e-11)
    n = mid_spectrum_states(a, 1)[0]
    np.testing.assert_allclose(a.probabilities(n), b.probabilities(n), atol=1e-10)
