import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockforge.fock_core import build_basis, identity
from fockforge.bilinears import build_density
from fockforge.lattice import GridSpec
from fockforge.transeries import (
    GradedSeries,
    KindMismatch,
    TransSeries,
    evaluate_at_delta,
    exp_function,
    lemma_check,
    log_function,
    polynomial,
    power_function,
    random_lemma_instance,
    series_apply_function,
)

small = st.complex_numbers(max_magnitude=0.3, allow_nan=False, allow_infinity=False)
offsets = st.integers(-3, 3)
series_st = st.dictionaries(offsets, small, max_size=4).map(lambda d: TransSeries({(k,): v for k, v in d.items()}))


def _close(a: TransSeries, b: TransSeries, tol=1e-12):
    return (a - b).max_abs() <= tol


def test_translations_compose():
    t = TransSeries.translation(2) * TransSeries.translation(-5)
    assert t.coefficients == {(-3,): 1.0}


def test_evaluate_at_delta_reads_negative_offset():
    s = TransSeries({(-2,): 5.0, (2,): 7.0})
    assert evaluate_at_delta(s, 2) == 5.0
    assert evaluate_at_delta(s, (-2,)) == 7.0


def test_from_fourier_convention():
    # f(x) = a exp(2ix) -> a T_{-2}; delta evaluation at k = 2 recovers a
    s = TransSeries.from_fourier({(2,): 0.25})
    assert evaluate_at_delta(s, 2) == 0.25


def test_window_drops_and_counts():
    s = TransSeries({(1,): 1.0}, max_offset=2) * TransSeries({(2,): 3.0}, max_offset=2)
    assert len(s) == 0
    assert s.dropped == 1 and s.dropped_mass == 3.0


def test_period_wraps_offsets():
    s = TransSeries({(1,): 1.0}, period=3) * TransSeries({(1,): 1.0}, period=3)
    assert s.coefficients == {(-1,): 1.0}


def test_kind_mismatch():
    basis = build_basis(GridSpec(n_max=1), "fermi", (1, 0))
    op = TransSeries({(0,): identity(basis)})
    with pytest.raises(KindMismatch):
        op + TransSeries({(0,): 1.0})


def test_operator_products_keep_order():
    basis = build_basis(GridSpec(n_max=1, boundary_mode="wrap"), "fermi", (1, 0))
    a, b = build_density(basis, (1,), "up"), build_density(basis, (0,), "up") + build_density(basis, (-1,), "up")
    sa, sb = TransSeries({(1,): a}), TransSeries({(2,): b})
    assert np.allclose((sa * sb)[(3,)].toarray(), (a @ b).toarray())
    assert np.allclose((sb * sa)[(3,)].toarray(), (b @ a).toarray())


@settings(max_examples=40, deadline=None)
@given(series_st, series_st, series_st)
def test_ring_axioms(a, b, c):
    assert _close((a * b) * c, a * (b * c))
    assert _close(a * (b + c), a * b + a * c)
    assert _close(a * a.unit(), a)


tiny = st.complex_numbers(max_magnitude=0.1, allow_nan=False, allow_infinity=False)
cyclic_st = st.dictionaries(offsets, tiny, max_size=3).map(
    lambda d: TransSeries({(k,): v for k, v in d.items()}, period=7)
)


@settings(max_examples=30, deadline=None)
@given(cyclic_st)
def test_exp_log_round_trip(a):
    # on a cyclic offset lattice every series is finite, so high orders stay cheap
    one = a.unit()
    e = series_apply_function(exp_function(), a, 25)
    back = series_apply_function(log_function(1.0), e, 40)
    assert _close(back, a, 1e-9)
    inv = series_apply_function(power_function(-1.0), one + a, 60)
    assert _close(inv * (one + a), one, 1e-9)


def test_graded_degrees_and_cutoff():
    x = GradedSeries.of(TransSeries({(1,): 1.0}), 1, order=3)
    y = series_apply_function(exp_function(), x, 3)
    assert sorted(y.components) == [0, 1, 2, 3]
    assert y.component(3)[(3,)] == pytest.approx(1 / 6)
    assert (x * x * x * x).components == {}


def test_graded_leading_term_must_match():
    x = GradedSeries.of(TransSeries({(0,): 2.0}), 0, order=2)
    with pytest.raises(ValueError, match="expansion point"):
        series_apply_function(log_function(1.0), x, 2)


def test_lemma_single_mode_exact():
    # F = exp, f = a cos x: Fourier coefficients are modified Bessel functions
    a = 0.3
    rep = lemma_check(exp_function(30), {(1,): a / 2, (-1,): a / 2}, order=29)
    assert rep.max_abs_error <= 1e-12
    assert not rep.divergence_flag
    from math import factorial

    i1 = sum((a / 2) ** (2 * m + 1) / (factorial(m) * factorial(m + 1)) for m in range(20))
    assert abs(rep.series_path[(1,)] - i1) <= 1e-14


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_lemma_random_polynomials(seed):
    F, f = random_lemma_instance(np.random.default_rng(seed))
    rep = lemma_check(F, f)
    assert rep.max_abs_error <= 1e-9
    assert rep.dropped == 0


def test_lemma_polynomial_agrees_with_direct_power():
    F = polynomial([0, 0, 1])
    f = {(1,): 0.2, (-2,): 0.1j}
    rep = lemma_check(F, f)
    s = TransSeries.from_fourier(f)
    sq = s * s
    for q, v in rep.series_path.items():
        assert cmath.isclose(v, evaluate_at_delta(sq, q), abs_tol=1e-15)
