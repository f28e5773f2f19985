import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockforge.fock_core import (
    ShapeError,
    StateVector,
    adjoint,
    anticommutator,
    build_annihilation,
    build_basis,
    build_bilinear,
    build_creation,
    build_fock_space,
    build_ladder,
    build_sector_shift,
    car_violations,
    commutator,
    identity,
    operator_norm,
    shifted_basis,
)
from fockforge.lattice import GridSpec, Mode, Spin


@pytest.mark.parametrize(
    "n_max,pn,dim",
    [(1, (2, 0), 3), (1, (1, 1), 9), (2, (2, 0), 10), (1, (3, 0), 1), (1, (0, 0), 1)],
)
def test_fermi_sector_dimension(n_max, pn, dim):
    assert build_basis(GridSpec(n_max=n_max), "fermi", pn).dim == dim


def test_bose_sector_dimension():
    # 3 modes, 2 bosons, cap 2: C(3+2-1, 2) = 6
    assert build_basis(GridSpec(n_max=1), "bose", (2, 0), boson_cap=2).dim == 6
    # cap 1 removes the three doubly occupied states
    assert build_basis(GridSpec(n_max=1), "bose", (2, 0), boson_cap=1).dim == 3


def test_states_are_ordered_and_unique():
    basis = build_basis(GridSpec(n_max=2), "fermi", (2, 1))
    assert len(set(basis.states)) == basis.dim
    assert all(basis.sector_of(s) == (2, 1) for s in basis.states)


def test_fock_space_dimension():
    space = build_fock_space(GridSpec(n_max=1), "fermi")
    assert space.dim == 2**6


@settings(max_examples=10, deadline=None)
@given(st.sampled_from([(1, 0), (1, 1), (2, 0), (3, 0)]))
def test_car_on_full_space(grid_args):
    dim, n_max = grid_args
    grid = GridSpec(dim=dim, n_max=n_max, boundary_mode="wrap")
    if grid.n_modes > 8:
        return
    v = car_violations(build_fock_space(grid, "fermi"))
    assert v["anticomm_c_cdag"] <= 1e-12
    assert v["anticomm_c_c"] <= 1e-12


def test_creation_is_adjoint_of_annihilation():
    grid = GridSpec(n_max=1)
    two = build_basis(grid, "fermi", (1, 1))
    for m in range(grid.n_modes):
        c = build_annihilation(two, m)
        cd = build_creation(c.codomain, m, two)
        assert np.array_equal(c.H.toarray(), cd.toarray())


def test_fermi_sign_convention():
    grid = GridSpec(n_max=1)
    two = build_basis(grid, "fermi", (2, 0))
    state = StateVector.basis_state(two, (1, 0, 1, 0, 0, 0))
    out = build_annihilation(two, 2) @ state
    # c_2 c†_0 c†_2 |0> = - c†_0 |0>
    assert out.amplitudes[out.basis.index[(1, 0, 0, 0, 0, 0)]] == -1


def test_bose_ccr_below_cap():
    grid = GridSpec(n_max=0)
    space = build_fock_space(grid, "bose", boson_cap=4, max_per_spin=4)
    b = build_annihilation(space, 0)
    bd = build_creation(space, 0)
    c = commutator(b, bd).toarray()
    low = [i for i, s in enumerate(space.states) if s[0] < 4]
    assert np.allclose(c[np.ix_(low, low)], np.eye(len(low)))
    assert math.isclose(abs((b @ StateVector.basis_state(space, (3, 0))).amplitudes).max(), math.sqrt(3))


def test_ladder_closed_under_annihilation():
    grid = GridSpec(n_max=1)
    ladder = build_ladder(grid, "fermi", (2, 1), "up")
    assert ladder.sectors == ((2, 1), (1, 1), (0, 1))
    c = build_annihilation(ladder, Mode(Spin.UP, (0,)))
    assert c.codomain is ladder


def test_sector_shift_is_isometric_on_occupied_states():
    grid = GridSpec(n_max=1)
    basis = build_basis(grid, "bose", (2, 0), boson_cap=2)
    e = build_sector_shift(basis, "up")
    data = e.matrix.data
    assert np.allclose(np.abs(data), 1)


def test_shifted_basis_rejects_negative():
    with pytest.raises(ValueError):
        shifted_basis(build_basis(GridSpec(), "fermi", (0, 0)), Spin.UP, -1)


def test_bilinear_number_operator():
    grid = GridSpec(n_max=1)
    basis = build_basis(grid, "fermi", (2, 1))
    n_up = build_bilinear(basis, [(i, i, 1.0) for i in range(3)])
    assert np.allclose(n_up.toarray(), 2 * np.eye(basis.dim))


def test_shape_errors():
    grid = GridSpec(n_max=1)
    a = identity(build_basis(grid, "fermi", (1, 0)))
    b = identity(build_basis(grid, "fermi", (2, 0)))
    with pytest.raises(ShapeError):
        a + b
    with pytest.raises(ShapeError):
        StateVector(a.domain, np.zeros(5))


def test_operator_norm_matches_numpy():
    rng = np.random.default_rng(3)
    grid = GridSpec(n_max=1)
    basis = build_basis(grid, "fermi", (1, 1))
    terms = [(int(rng.integers(6)), int(rng.integers(6)), complex(*rng.normal(size=2))) for _ in range(8)]
    op = build_bilinear(basis, terms)
    assert math.isclose(operator_norm(op), np.linalg.norm(op.toarray(), 2), rel_tol=1e-12)
    assert np.allclose(adjoint(op).toarray(), op.toarray().conj().T)
    ac = anticommutator(op, op.H)
    assert np.allclose(ac.toarray(), ac.toarray().conj().T)
