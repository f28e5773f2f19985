import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockforge.lattice import GridSpec, Spin
from fockforge.oracles import phase_tables_exact
from fockforge.phase import (
    FermiParams,
    PhaseForm,
    PhaseFunctional,
    build_phase_hd,
    density_components,
    fermi_weight,
    recursion_closed_form,
    recursion_residual,
)

GRID8 = GridSpec(n_max=8)
PARAMS8 = FermiParams(k_f=1.0, grid=GRID8)


def _w2_brute(q):
    # a separate, deliberately naive loop over integer k with the sharp sea |k| <= 1
    total = 0
    for k in range(-8, 9):
        plus = abs(k - q / 2) <= 1
        minus = abs(k + q / 2) <= 1
        total += int(plus and not minus) ** 2
    return total / 3


def test_sea_spans_three_points():
    assert PARAMS8.sea() == [(-1,), (0,), (1,)]
    assert PARAMS8.particle_count == 3


def test_hand_values_q1_q2():
    phi = build_phase_hd(PARAMS8)
    rows = {r.q: r for r in phi.table}
    # q = 1: Lambda_k(-1) is nonzero only at k = -1/2 + ... -> one grid point
    assert rows[(1,)].w2 == pytest.approx(1 / 3, abs=1e-15)
    assert rows[(1,)].w1 == pytest.approx(1 / 3, abs=1e-15)
    assert rows[(1,)].U0 == pytest.approx(math.sqrt(2) / 3, abs=1e-15)
    assert rows[(2,)].status == "negative_radicand"
    assert rows[(2,)].U0 is None


@pytest.mark.parametrize("q", [1, 2, 3, -1, -2])
def test_w2_against_brute_force(q):
    phi = build_phase_hd(PARAMS8)
    rows = {r.q: r for r in phi.table}
    assert abs(rows[(q,)].w2 - _w2_brute(q)) <= 1e-12


def test_tables_against_fraction_oracle():
    phi = build_phase_hd(PARAMS8)
    oracle = phase_tables_exact(8, 1, Fraction(1), 3)
    for row in phi.table:
        ref = oracle[row.q]
        assert abs(row.w2 - float(ref["w2"])) <= 1e-12
        if ref["w1"] is not None:
            assert abs(row.w1 - float(ref["w1"])) <= 1e-12
        if ref["U0"] is not None:
            assert abs(row.U0 - ref["U0"]) <= 1e-12
        else:
            assert row.U0 is None


def test_zero_transfer_excluded():
    phi = build_phase_hd(PARAMS8)
    zero = [r for r in phi.table if r.q == (0,)][0]
    assert zero.status == "excluded" and zero.w2 == 0
    assert all(fermi_weight(PARAMS8, GRID8.momentum(k), (0.0,)) == 0 for k in GRID8.points)
    assert phi.coefficient((0,)) == 0


def test_no_clamping_of_negative_radicands():
    phi = build_phase_hd(PARAMS8)
    for r in phi.table:
        if r.status == "negative_radicand":
            assert r.radicand < 0 and r.q not in phi.U0


def test_bose_is_zero():
    phi = build_phase_hd(PARAMS8, "bose")
    assert phi.form is PhaseForm.ZERO and not phi.U0


def test_invalid_params():
    with pytest.raises(ValueError):
        FermiParams(k_f=0.0)
    with pytest.raises(ValueError):
        FermiParams(k_f=1.0, mass=-1.0)


def test_small_fermi_momentum_keeps_only_zero():
    params = FermiParams(k_f=0.1, grid=GridSpec(dim=1, box_length=1.0, n_max=1))
    assert params.sea() == [(0,)]
    phi = build_phase_hd(params)
    assert all(r.status in ("excluded", "negative_radicand", "w2_zero") or r.U0 is not None for r in phi.table)


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.floats(0, 2 * math.pi), min_size=1, max_size=4),
    st.lists(st.floats(0, 2 * math.pi), min_size=1, max_size=4),
    st.floats(0, 2 * math.pi),
)
def test_phase_is_linear_in_density(ys1, ys2, x):
    phi = build_phase_hd(PARAMS8)
    r1 = density_components([((y,), Spin.UP) for y in ys1], Spin.UP, GRID8)
    r2 = density_components([((y,), Spin.UP) for y in ys2], Spin.UP, GRID8)
    r12 = {q: r1[q] + r2[q] for q in r1}
    lhs = phi.evaluate(r12, (x,), GRID8)
    assert abs(lhs - phi.evaluate(r1, (x,), GRID8) - phi.evaluate(r2, (x,), GRID8)) <= 1e-12


def test_recursion_matches_closed_form():
    phi = build_phase_hd(PARAMS8)
    rng = np.random.default_rng(5)
    for _ in range(20):
        conf = [((float(rng.uniform(0, 2 * math.pi)),), Spin.UP) for _ in range(3)]
        x, xp = (float(rng.uniform(0, 6)),), (float(rng.uniform(0, 6)),)
        r = recursion_residual(phi, conf, x, xp, "up", "up", GRID8)
        assert abs(r.raw - recursion_closed_form(phi, x, xp, GRID8)) <= 1e-12


def test_recursion_vanishes_at_coincidence():
    phi = build_phase_hd(PARAMS8)
    r = recursion_residual(phi, [((0.4,), Spin.UP)], (1.1,), (1.1,), "up", "up", GRID8)
    assert r.raw == 0 and r.m == 0


def test_recursion_bose_even():
    r = recursion_residual(PhaseFunctional.zero(), [((0.4,), Spin.UP)], (0.1,), (2.0,), "up", "up", GRID8, "bose")
    assert r.residual == 0 and r.m == 0 and r.parity_ok


def test_recursion_even_u0_gives_imaginary_combination():
    # U0(q) = U0(-q) makes the closed form 2i sum U0 sin(q d): purely imaginary, so m = 0
    phi = build_phase_hd(PARAMS8)
    r = recursion_residual(phi, [((0.4,), Spin.UP)], (0.3,), (1.9,), "up", "up", GRID8)
    assert abs(r.raw.real) <= 1e-12
    assert r.m == 0 and not r.parity_ok


def test_recursion_different_spins_cancels():
    phi = build_phase_hd(PARAMS8)
    conf = [((0.4,), Spin.UP), ((2.2,), Spin.DOWN)]
    r = recursion_residual(phi, conf, (0.3,), (1.9,), "up", "down", GRID8)
    rho_up = density_components(conf, Spin.UP, GRID8)
    rho_dn = density_components(conf, Spin.DOWN, GRID8)
    expected = 0j
    assert abs(r.raw - expected) <= 1e-12
    assert rho_up[(1,)] == cmath.exp(0.4j)
    assert rho_dn[(1,)] == cmath.exp(2.2j)
