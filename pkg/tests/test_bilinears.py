import math

import numpy as np
import pytest

from fockforge.bilinears import (
    build_current,
    build_delta_psi,
    build_delta_rho,
    build_density,
    build_field,
    build_number,
    is_zero_transfer,
)
from fockforge.fock_core import build_basis, build_fock_space, build_sector_shift, commutator
from fockforge.harness import current_equivalence
from fockforge.lattice import SPINS, GridSpec


def test_density_at_zero_is_number():
    grid = GridSpec(n_max=1)
    basis = build_basis(grid, "fermi", (2, 1))
    assert np.allclose(build_number(basis, "up").toarray(), 2 * np.eye(basis.dim))
    assert np.allclose(build_number(basis, "down").toarray(), np.eye(basis.dim))


def test_densities_commute_in_wrap_mode(wrap1):
    space = build_fock_space(wrap1, "fermi")
    ops = [build_density(space, k, s) for s in SPINS for k in wrap1.points]
    for a in ops:
        for b in ops:
            assert commutator(a, b).nnz == 0


def test_densities_do_not_commute_when_truncated(trunc2):
    # the truncated grid loses hops at the edge, so this is not an identity there
    basis = build_basis(trunc2, "fermi", (2, 0))
    c = commutator(build_density(basis, (1,), "up"), build_density(basis, (-1,), "up"))
    assert c.nnz > 0


@pytest.mark.parametrize("grid", [GridSpec(n_max=1, boundary_mode="wrap"), GridSpec(n_max=2)])
def test_adjoint_relations(grid):
    basis = build_basis(grid, "fermi", (2, 1))
    for s in SPINS:
        for k in grid.transfers():
            nk = tuple(-c for c in k)
            assert np.array_equal(build_density(basis, k, s).H.toarray(), build_density(basis, nk, s).toarray())
            assert np.array_equal(build_current(basis, k, s).H.toarray(), build_current(basis, nk, s).toarray())


@pytest.mark.parametrize("sector", [(1, 0), (2, 0), (1, 1)])
def test_current_matches_first_quantized(trunc2, sector):
    assert current_equivalence(trunc2, sector) <= 1e-10


def test_current_matches_first_quantized_2d():
    assert current_equivalence(GridSpec(dim=2, n_max=1), (2, 0)) <= 1e-10


def test_continuity_commutator():
    # [j(p), rho(k)] = k rho(k + p) away from the wrap seam: checked on a truncated grid
    grid = GridSpec(n_max=3)
    basis = build_basis(grid, "fermi", (1, 0))
    for p in [(1,), (-1,)]:
        for k in [(1,), (-1,)]:
            lhs = commutator(build_current(basis, p, "up"), build_density(basis, k, "up")).toarray()
            kp = tuple(a + b for a, b in zip(k, p))
            rhs = grid.momentum(k)[0] * build_density(basis, kp, "up").toarray()
            # only states that stay inside the grid under both hops are compared
            up = grid.points_per_spin
            inner = [i for i, s in enumerate(basis.states) if not (s[0] or s[1] or s[up - 2] or s[up - 1])]
            assert np.allclose(lhs[np.ix_(inner, inner)], rhs[np.ix_(inner, inner)])


def test_delta_rho_subtracts_home_count():
    grid = GridSpec(n_max=1)
    basis = build_basis(grid, "fermi", (2, 0))
    assert build_delta_rho(basis, (0,), "up").nnz == 0
    assert np.array_equal(build_delta_rho(basis, (1,), "up").toarray(), build_density(basis, (1,), "up").toarray())
    assert is_zero_transfer((3,), GridSpec(n_max=1, boundary_mode="wrap"))


def test_delta_psi_removes_condensate_part():
    grid = GridSpec(n_max=1)
    basis = build_basis(grid, "bose", (2, 0), boson_cap=2)
    dpsi = build_delta_psi(basis, (0,), "up")
    expected = build_field(basis, (0,), "up").toarray() - math.sqrt(2) * build_sector_shift(basis, "up").toarray()
    assert np.allclose(dpsi.toarray(), expected)
    # on the condensate b_0 |2> = sqrt 2 |1>, so the fluctuation vanishes there
    col = basis.index[(2, 0, 0, 0, 0, 0)]
    assert np.allclose(dpsi.toarray()[:, basis.index[(0, 2, 0, 0, 0, 0)]], 0)
    assert col is not None


def test_field_off_grid_is_zero(trunc2):
    basis = build_basis(trunc2, "fermi", (1, 0))
    assert build_field(basis, (4,), "up").nnz == 0
