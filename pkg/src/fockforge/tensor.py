"""Literal n-particle tensors with b(f), b*(f) and the (anti)symmetrizers.

Independent of the occupation-number encoding in :mod:`fockforge.fock_core`;
used as the oracle for small particle numbers.  Tensors are dicts from index
tuples to coefficients, and arithmetic is exact whenever the inputs are
(sympy is used for the square roots).
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Dict, Sequence, Tuple

import sympy

Tensor = Dict[Tuple[int, ...], object]


def _conj(x):
    return sympy.conjugate(x) if isinstance(x, sympy.Basic) else x.conjugate()


def _prune(t: Tensor) -> Tensor:
    out = {}
    for k, v in t.items():
        v = sympy.expand(v) if isinstance(v, sympy.Basic) else v
        if v != 0:
            out[k] = v
    return out


def product(*vectors: Sequence) -> Tensor:
    """``f1 ⊗ f2 ⊗ ...`` in the standard basis; no vectors gives the scalar 1."""
    t: Tensor = {(): sympy.Integer(1)}
    for vec in vectors:
        nxt: Tensor = {}
        for key, c in t.items():
            for i, a in enumerate(vec):
                if a != 0:
                    nxt[key + (i,)] = nxt.get(key + (i,), 0) + c * a
        t = nxt
    return _prune(t)


def add(*tensors: Tensor, coeffs=None) -> Tensor:
    coeffs = coeffs or [1] * len(tensors)
    out: Tensor = {}
    for t, c in zip(tensors, coeffs):
        for k, v in t.items():
            out[k] = out.get(k, 0) + c * v
    return _prune(out)


def scale(c, t: Tensor) -> Tensor:
    return _prune({k: c * v for k, v in t.items()})


def rank(t: Tensor) -> int:
    ranks = {len(k) for k in t}
    if len(ranks) > 1:
        raise ValueError("mixed-rank tensor")
    return ranks.pop() if ranks else 0


def b(f: Sequence, t: Tensor, sqrt: Callable = sympy.sqrt) -> Tensor:
    """``b(f) f1⊗...⊗fn = sqrt(n) (f, f1) f2⊗...⊗fn``; zero on scalars."""
    n = rank(t)
    if n == 0:
        return {}
    out: Tensor = {}
    for key, c in t.items():
        w = _conj(f[key[0]])
        if w != 0:
            out[key[1:]] = out.get(key[1:], 0) + sqrt(n) * w * c
    return _prune(out)


def b_star(f: Sequence, t: Tensor, sqrt: Callable = sympy.sqrt) -> Tensor:
    """``b*(f) f1⊗...⊗fn = sqrt(n+1) f⊗f1⊗...⊗fn``."""
    n = rank(t)
    out: Tensor = {}
    for key, c in t.items():
        for i, a in enumerate(f):
            if a != 0:
                k = (i,) + key
                out[k] = out.get(k, 0) + sqrt(n + 1) * a * c
    return _prune(out)


def _perm_sign(p: Sequence[int]) -> int:
    sign, seen = 1, [False] * len(p)
    for i in range(len(p)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = p[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _symmetrize(t: Tensor, antisym: bool) -> Tensor:
    n = rank(t)
    if n <= 1:
        return dict(t)
    norm = sympy.Rational(1, math.factorial(n))
    out: Tensor = {}
    for key, c in t.items():
        for p in itertools.permutations(range(n)):
            k = tuple(key[p[i]] for i in range(n))
            s = _perm_sign(p) if antisym else 1
            out[k] = out.get(k, 0) + s * norm * c
    return _prune(out)


def p_minus(t: Tensor) -> Tensor:
    return _symmetrize(t, True)


def p_plus(t: Tensor) -> Tensor:
    return _symmetrize(t, False)


def c(f, t: Tensor) -> Tensor:
    """Fermi annihilator ``P- b(f) P-``."""
    return p_minus(b(f, p_minus(t)))


def c_star(f, t: Tensor) -> Tensor:
    return p_minus(b_star(f, p_minus(t)))


def inner(f: Sequence, g: Sequence):
    """``(f, g)``, antilinear in the first slot."""
    return sympy.expand(sum(_conj(a) * b_ for a, b_ in zip(f, g)))


def encode_antisymmetric(t: Tensor) -> Dict[Tuple[int, ...], object]:
    """Occupation amplitudes of an antisymmetric tensor.

    ``|m1<...<mn> = c†_{m1}...c†_{mn}|0>`` corresponds to
    ``(n!)^{-1/2} sum_P sign(P) e_{P(m1)}⊗...``, so its amplitude is
    ``sqrt(n!)`` times the sorted tensor entry.
    """
    n = rank(t)
    out = {}
    for key, v in t.items():
        if list(key) == sorted(set(key)) and len(set(key)) == n:
            out[key] = sympy.expand(sympy.sqrt(math.factorial(n)) * v)
    return _prune(out)


def worked_example(f, g, f1, f2) -> Tensor:
    """The displayed closed form of ``c*(f) c(g) f1⊗f2``.

    ``(1/2!)^2 sqrt(2)^2 [ (g,f1)(f⊗f2 - f2⊗f) - (g,f2)(f⊗f1 - f1⊗f) ]``
    """
    pref = sympy.Rational(1, 4) * sympy.sqrt(2) ** 2
    a = add(product(f, f2), product(f2, f), coeffs=[1, -1])
    bb = add(product(f, f1), product(f1, f), coeffs=[1, -1])
    return scale(pref, add(a, bb, coeffs=[inner(g, f1), -inner(g, f2)]))
