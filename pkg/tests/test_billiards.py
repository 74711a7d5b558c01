import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qclab.billiards import (
    SINAI_AX,
    SINAI_AY,
    BilliardShape,
    discretize,
    inside,
    load_solution,
    pascal_area,
    required_n_grid,
    save_solution,
    solve_billiard,
    weyl_count,
)
from qclab.errors import GeometryError, ResolutionError, ValidationError

from helpers import backward_error


def rectangle_levels(a, b, count):
    m = np.arange(1, 60)
    e = (np.pi**2 / 2) * (m[:, None] ** 2 / a**2 + m[None, :] ** 2 / b**2)
    return np.sort(e.ravel())[:count]


@pytest.fixture(scope="module")
def small_solutions():
    out = {}
    for kind, lam in (("sinai", 0.3), ("stadium", 0.4), ("pascal", 0.3)):
        shape = BilliardShape(kind, lam)
        out[kind] = solve_billiard(shape, required_n_grid(shape, 200), 200)
    return out


def test_inside_sinai_disk_center_excluded():
    # the quarter domain has the disk center at its origin corner
    assert not inside(BilliardShape("sinai", 0.2), 0.0, 0.0)
    assert not inside(BilliardShape("sinai", 0.2), 0.1, 0.1)
    assert inside(BilliardShape("sinai", 0.2), 1.0, 0.9)


def test_inside_pascal_unit_half_disk():
    shape = BilliardShape("pascal", 0.0)
    assert inside(shape, 0.5, 0.1)
    assert not inside(shape, 1.2, 0.1)
    assert not inside(shape, 0.5, -0.1)


def test_inside_stadium_quarter_disk_arc():
    c = 0.99 / math.sqrt(2)
    assert inside(BilliardShape("stadium", 0.0), c, c)
    assert not inside(BilliardShape("stadium", 0.0), 0.75, 0.75)


def test_invalid_parameters():
    with pytest.raises(ValidationError):
        BilliardShape("sinai", 0.9)
    with pytest.raises(GeometryError):
        BilliardShape("sinai", 0.46)
    with pytest.raises(ValidationError):
        BilliardShape("triangle", 0.1)
    with pytest.raises(ValidationError):
        BilliardShape("stadium", -0.1)


def test_rectangle_interior_count():
    g = discretize(BilliardShape("sinai", 0.0), 64)
    ny = g.mask.shape[0]
    assert g.n_interior == (64 - 2) * (ny - 2)


@pytest.mark.parametrize("kind,lam", [("sinai", 0.0), ("sinai", 0.3), ("stadium", 0.4), ("pascal", 0.3), ("pascal", 0.8)])
def test_interior_count_scales_with_area(kind, lam):
    shape = BilliardShape(kind, lam)
    n1 = discretize(shape, 64).n_interior
    n2 = discretize(shape, 127).n_interior
    assert abs(n2 / n1 - 4.0) < 0.2


def pascal_area_monte_carlo(lam, n, seed=0):
    """Even-odd area of the limacon by counting preimages in the unit disk."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.5, 2.0, n)
    y = rng.uniform(-2.0, 2.0, n)
    w = x + 1j * y
    root = np.sqrt(1 + 4 * lam * w)
    z = np.stack([(-1 + root) / (2 * lam), (-1 - root) / (2 * lam)])
    count = (np.abs(z) < 1).sum(axis=0)
    box = 3.5 * 4.0
    return box * np.mean(count % 2 == 1)


def test_pascal_area_against_preimage_count():
    oracle = pascal_area_monte_carlo(0.8, 2_000_000)
    assert abs(pascal_area(0.8) / oracle - 1) < 0.01
    g = discretize(BilliardShape("pascal", 0.8), 128)
    assert abs(g.n_interior * g.h**2 / (oracle / 2) - 1) < 0.02


def test_pascal_univalent_area_closed_form():
    for lam in (0.0, 0.25, 0.5):
        assert abs(pascal_area(lam) - math.pi * (1 + 2 * lam * lam)) < 1e-12


def test_rectangle_ground_level():
    sol = solve_billiard(BilliardShape("sinai", 0.0), 128, 5)
    exact = (np.pi**2 / 2) * (1 / SINAI_AX**2 + 1 / SINAI_AY**2)
    assert abs(exact - 8.883) < 1e-3
    assert abs(sol.energies[0] / exact - 1) < 0.01


def test_quarter_disk_bessel_oracle():
    sol = solve_billiard(BilliardShape("stadium", 0.0), 256, 3)
    j21 = 5.135622301840683
    assert abs(sol.energies[0] / (j21**2 / 2) - 1) < 0.01
    assert abs(j21**2 / 2 - 13.187) < 1e-3


def test_second_order_convergence():
    # a 2 x 1 rectangle aligns both walls with the lattice, so the error is purely O(h^2)
    shape = BilliardShape("sinai", 0.0, a_x=2.0, a_y=1.0)
    exact = rectangle_levels(2.0, 1.0, 10)[9]
    errs = [abs(solve_billiard(shape, n, 10).energies[9] - exact) / exact for n in (65, 129)]
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_resolution_error_names_grid():
    shape = BilliardShape("sinai", 0.3)
    need = required_n_grid(shape, 500)
    with pytest.raises(ResolutionError) as info:
        solve_billiard(shape, 64, 500)
    assert info.value.required_n_grid == need
    assert str(need) in str(info.value)


def test_residuals(small_solutions):
    for sol in small_solutions.values():
        assert backward_error(sol).max() < 1e-8


def test_weyl_two_term(small_solutions):
    for sol in small_solutions.values():
        n = np.arange(1, 201)
        w = weyl_count(sol.shape, sol.energies)
        assert np.abs(w[99:] / n[99:] - 1).max() < 0.08


def test_ground_state_nodeless(small_solutions):
    for sol in small_solutions.values():
        psi = sol.field(0)[sol.grid.mask]
        assert np.all(psi > 0)


def test_no_degeneracies_in_reduced_domains(small_solutions):
    for sol in small_solutions.values():
        e = sol.energies
        assert np.all(np.diff(e) > 1e-6 * e[1:])


def test_eigenfunction_normalization(small_solutions):
    sol = small_solutions["sinai"]
    for n in (0, 50, 199):
        psi = sol.field(n)
        assert abs((psi**2).sum() * sol.grid.h**2 - 1) < 1e-10
        assert np.all(psi[~sol.grid.mask] == 0)


def test_solution_round_trip(tmp_path, small_solutions):
    sol = small_solutions["stadium"]
    save_solution(sol, tmp_path, states=(10, 20))
    back = load_solution(tmp_path)
    np.testing.assert_array_equal(back.energies, sol.energies)
    np.testing.assert_array_equal(back.field(15), sol.field(15))
    with pytest.raises(ValidationError):
        back.field(25)


@settings(max_examples=30, deadline=None)
@given(lam=st.floats(0.0, 0.44), x=st.floats(0.0, SINAI_AX), y=st.floats(0.0, SINAI_AY))
def test_sinai_inside_matches_geometry(lam, x, y):
    shape = BilliardShape("sinai", lam)
    r = shape.disk_radius
    expected = 0 < x < SINAI_AX and 0 < y < SINAI_AY and x * x + y * y > r * r
    d = min(x, y, SINAI_AX - x, SINAI_AY - y, abs(math.hypot(x, y) - r))
    if d > 1e-9:
        assert bool(inside(shape, x, y)) == expected
