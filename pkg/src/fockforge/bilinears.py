"""Density, current and field operators in momentum space, plus their fluctuation parts.

Conventions (``g = exp(i k.x) ⊗ xi_s``, no volume factor):

* ``rho(k, s) = sum_q c†_{q+k,s} c_{q,s}`` is dimensionless; ``rho(0, s) = N_s``.
* ``j(k, s)_c = sum_q (q + k/2)_c c†_{q+k,s} c_{q,s}`` in physical momentum units.
  With wrapping, ``(q + k/2)`` is taken as the midpoint of the two grid momenta
  actually joined, which keeps ``j(k)† = j(-k)`` exact.
* ``psi(k, s) = c_{k,s}``.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

from .fock_core import (
    FockBasis,
    SparseOperator,
    build_annihilation,
    build_bilinear,
    build_sector_shift,
    identity,
    zero_operator,
    shifted_basis,
)
from .lattice import GridSpec, Mode, Spin, mode_index, momentum_shift


def _vec(k, grid: GridSpec):
    k = (k,) if isinstance(k, int) else tuple(int(c) for c in k)
    if len(k) != grid.dim:
        raise ValueError(f"momentum {k} does not match grid dimension {grid.dim}")
    return k


def is_zero_transfer(k: Sequence[int], grid: GridSpec) -> bool:
    k = _vec(k, grid)
    if grid.wrap:
        k = grid.fold(k)
    return not any(k)


def _hops(grid: GridSpec, k, spin: Spin):
    for q in grid.points:
        m = Mode(spin, q)
        dst = momentum_shift(m, k, grid)
        if dst is not None:
            yield m, dst


def build_density(basis: FockBasis, k, s) -> SparseOperator:
    grid, spin = basis.grid, Spin.parse(s)
    k = _vec(k, grid)
    terms = [(mode_index(grid, dst), mode_index(grid, src), 1.0) for src, dst in _hops(grid, k, spin)]
    return build_bilinear(basis, terms)


def build_number(basis: FockBasis, s) -> SparseOperator:
    return build_density(basis, (0,) * basis.grid.dim, s)


def build_current(basis: FockBasis, k, s, component: int = 0) -> SparseOperator:
    grid, spin = basis.grid, Spin.parse(s)
    k = _vec(k, grid)
    if not 0 <= component < grid.dim:
        raise ValueError(f"current component {component} out of range for dim {grid.dim}")
    terms = []
    for src, dst in _hops(grid, k, spin):
        amp = 0.5 * grid.unit * (src.n[component] + dst.n[component])
        terms.append((mode_index(grid, dst), mode_index(grid, src), amp))
    return build_bilinear(basis, terms)


def build_field(basis: FockBasis, k, s, target: Optional[FockBasis] = None) -> SparseOperator:
    """``psi(k, s) = c_{k,s}``; the zero operator when ``k`` is not a grid mode."""
    grid, spin = basis.grid, Spin.parse(s)
    k = _vec(k, grid)
    if grid.wrap:
        k = grid.fold(k)
    if grid.contains(k):
        return build_annihilation(basis, Mode(spin, k), target)
    return zero_operator(basis, target if target is not None else shifted_basis(basis, spin, -1))


def home_count(basis: FockBasis, s) -> int:
    return basis.particle_numbers[Spin.parse(s).index]


def build_delta_rho(basis: FockBasis, k, s) -> SparseOperator:
    """``rho(k, s) - N_s^0 delta_{k,0}`` with ``N_s^0`` from the basis' home sector."""
    rho = build_density(basis, k, s)
    if is_zero_transfer(k, basis.grid):
        return rho - home_count(basis, s) * identity(basis)
    return rho


def build_delta_j(basis: FockBasis, k, s, component: int = 0) -> SparseOperator:
    """The current has no c-number part, so its fluctuation is the current itself."""
    return build_current(basis, k, s, component)


def build_delta_psi(basis: FockBasis, k, s, target: Optional[FockBasis] = None) -> SparseOperator:
    """``psi(k, s) - sqrt(N_s^0) delta_{k,0} E_s``.

    ``E_s`` is the sector shift of :func:`fockforge.fock_core.build_sector_shift`,
    which embeds the c-number leading term as a map from sector N to N-1.
    """
    psi = build_field(basis, k, s, target)
    if is_zero_transfer(k, basis.grid):
        shift = build_sector_shift(basis, s, psi.codomain)
        return psi - math.sqrt(home_count(basis, s)) * shift
    return psi
