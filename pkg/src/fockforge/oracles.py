"""Reference computations written independently of the production builders.

Each oracle here shares no code with the module it checks beyond the grid
description, and uses the most literal arithmetic available (exact fractions,
explicit loops, first-quantized wavefunctions).
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

IntVec = Tuple[int, ...]


def _norm2(v) -> Fraction:
    return sum((Fraction(c) * Fraction(c) for c in v), Fraction(0))


def phase_tables_exact(n_max: int, dim: int, kf_units: Fraction, N: int = None) -> Dict[IntVec, dict]:
    """Lambda, w1, w2 and U0 in grid units with exact fractions.

    With ``eps_q = q^2 / 2m`` the mass and the grid unit drop out of w1:
    ``w1(q) = (1 / (N |q|^4)) sum_k (k.q)^2 Lambda_k(-q)^2``.  Occupation is
    ``|p| <= kf_units`` with ``p`` in units of ``2 pi / L``.
    """
    kf2 = Fraction(kf_units) ** 2
    side = range(-n_max, n_max + 1)
    ks = list(itertools.product(side, repeat=dim))
    sea = [k for k in ks if _norm2(k) <= kf2]
    if N is None:
        N = len(sea)
    qs = list(itertools.product(range(-2 * n_max, 2 * n_max + 1), repeat=dim))
    out = {}
    for q in qs:
        half = [Fraction(-c, 2) for c in q]  # Lambda is evaluated at -q
        s1 = Fraction(0)
        s2 = Fraction(0)
        for k in ks:
            up = _norm2([a + h for a, h in zip(k, half)]) <= kf2
            down = _norm2([a - h for a, h in zip(k, half)]) <= kf2
            lam = 1 if (up and not down) else 0
            if lam:
                kq = sum(a * b for a, b in zip(k, q))
                s1 += Fraction(kq * kq)
                s2 += 1
        q2 = _norm2(q)
        w2 = s2 / N
        theta = 1 if q2 <= kf2 else 0
        row = {"w2": w2, "theta": theta, "w1": None, "radicand": None, "U0": None}
        if q2:
            row["w1"] = s1 / (N * q2 * q2)
            if w2:
                rad = (theta - row["w1"]) / w2
                row["radicand"] = rad
                if rad >= 0:
                    row["U0"] = math.sqrt(rad) / N
        out[q] = row
    return out


def lambda_at_zero(n_max: int, dim: int, kf_units: Fraction) -> List[int]:
    """Lambda_k(0) for every grid k, straight from the occupation rule."""
    kf2 = Fraction(kf_units) ** 2
    vals = []
    for k in itertools.product(range(-n_max, n_max + 1), repeat=dim):
        occ = _norm2(k) <= kf2
        vals.append(int(occ) * (1 - int(occ)))
    return vals


def first_quantized_current(
    occupied: Sequence[int], k: Sequence[int], spin_of, momentum_of, index_of, unit: float, component: int, spin
) -> Dict[Tuple[int, ...], complex]:
    """``J(k) = sum_i (p_i + k/2) e^{i k x_i}`` on the Slater determinant of ``occupied``.

    ``occupied`` lists single-particle indices; the state is the normalized
    antisymmetrized product.  Returns occupation amplitudes keyed by the
    sorted occupied indices of the resulting determinants, with the fermion
    sign of reordering ``c†_{a1} c†_{a2} ...`` into increasing order.
    """
    out: Dict[Tuple[int, ...], complex] = {}
    for slot, a in enumerate(occupied):
        if spin_of(a) != spin:
            continue
        p = momentum_of(a)
        target = tuple(x + y for x, y in zip(p, k))
        b = index_of(spin, target)
        if b is None:
            continue
        new = list(occupied)
        new[slot] = b
        if len(set(new)) < len(new):
            continue
        # sign of the permutation sorting ``new``
        perm = sorted(range(len(new)), key=lambda i: new[i])
        sign = 1
        seen = [False] * len(perm)
        for i in range(len(perm)):
            j, length = i, 0
            while not seen[j]:
                seen[j] = True
                j = perm[j]
                length += 1
            if length and length % 2 == 0:
                sign = -sign
        amp = unit * (p[component] + k[component] / 2)
        key = tuple(sorted(new))
        out[key] = out.get(key, 0) + sign * amp
    return {key: v for key, v in out.items() if v != 0}

