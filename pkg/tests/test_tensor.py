import numpy as np
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from fockforge import tensor
from fockforge.harness import worked_example_compare, worked_example_instance

rationals = st.fractions(min_value=-3, max_value=3, max_denominator=5).map(sympy.Rational)
vectors = st.lists(st.tuples(rationals, rationals), min_size=3, max_size=3).map(
    lambda v: [a + sympy.I * b for a, b in v]
)


def test_b_of_product():
    f = [1, 0, 0]
    t = tensor.product([1, 2, 0], [0, 1, 3])
    # b(f) f1⊗f2 = sqrt(2) (f, f1) f2
    assert tensor.b(f, t) == tensor.scale(sympy.sqrt(2), tensor.product([0, 1, 3]))


def test_p_minus_is_projector():
    t = tensor.product([1, 2, 0], [0, 1, 3])
    once = tensor.p_minus(t)
    assert not tensor.add(tensor.p_minus(once), once, coeffs=[1, -1])


def test_antisymmetrizer_kills_symmetric_tensor():
    f = [1, sympy.Rational(1, 2), 0]
    assert tensor.p_minus(tensor.product(f, f)) == {}


@settings(max_examples=15, deadline=None)
@given(vectors, vectors, vectors, vectors)
def test_worked_example_three_ways(f, g, f1, f2):
    out = worked_example_compare(f, g, f1, f2)
    assert out == {"closed_vs_tensor": True, "closed_vs_fock": True}


def test_worked_example_fixed_instances():
    rng = np.random.default_rng(11)
    for _ in range(3):
        assert all(worked_example_compare(*worked_example_instance(rng)).values())


def test_encoding_of_slater_determinant():
    t = tensor.p_minus(tensor.product([1, 0, 0], [0, 1, 0]))
    # (1/2)(e0⊗e1 - e1⊗e0) is c†_0 c†_1 |0> / sqrt(2)
    assert tensor.encode_antisymmetric(t) == {(0, 1): sympy.sqrt(2) / 2}
