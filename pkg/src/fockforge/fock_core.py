"""Occupation-number bases and exact sparse second-quantized operators.

Fermionic signs use the global mode order of :func:`fockforge.lattice.enumerate_modes`:
a basis state is ``c†_{m1} c†_{m2} ... |0>`` with ``m1 < m2 < ...``, so acting
with ``c_m`` or ``c†_m`` picks up ``(-1)`` to the number of occupied modes
before ``m``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .lattice import SPINS, GridSpec, Mode, Spin, mode_index

Occupation = Tuple[int, ...]
Sector = Tuple[int, int]

DENSE_NORM_LIMIT = 2000


class Statistics(str, Enum):
    FERMI = "fermi"
    BOSE = "bose"


class ShapeError(ValueError):
    """Operators or vectors living on incompatible bases."""


def normalize_particle_numbers(particle_numbers) -> Sector:
    if isinstance(particle_numbers, Mapping):
        out = [0, 0]
        for key, val in particle_numbers.items():
            out[Spin.parse(key).index] = int(val)
        return tuple(out)
    up, down = particle_numbers
    return int(up), int(down)


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Ordered occupation-number states spanning one or more particle-number sectors.

    ``particle_numbers`` is the home sector (N_up, N_down).  Most bases hold
    just that sector; ladders and full Fock spaces hold several, listed in
    ``sectors``.
    """

    grid: GridSpec
    statistics: Statistics
    particle_numbers: Sector
    boson_cap: int
    sectors: Tuple[Sector, ...]
    states: Tuple[Occupation, ...]

    @cached_property
    def index(self) -> Dict[Occupation, int]:
        return {s: i for i, s in enumerate(self.states)}

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def n_modes(self) -> int:
        return self.grid.n_modes

    @property
    def is_fermi(self) -> bool:
        return self.statistics is Statistics.FERMI

    def sector_of(self, state: Occupation) -> Sector:
        half = self.grid.points_per_spin
        return sum(state[:half]), sum(state[half:])

    @cached_property
    def sector_labels(self) -> np.ndarray:
        return np.array([self.sector_of(s) for s in self.states], dtype=int).reshape(-1, 2)

    def sector_indices(self, sector: Sector) -> np.ndarray:
        lab = self.sector_labels
        return np.flatnonzero((lab[:, 0] == sector[0]) & (lab[:, 1] == sector[1]))

    def same_space(self, other: "FockBasis") -> bool:
        return self is other or (
            self.grid == other.grid and self.statistics is other.statistics and self.states == other.states
        )

    def manifest(self) -> dict:
        from .lattice import enumerate_modes

        return {
            "grid": self.grid.to_json(),
            "statistics": self.statistics.value,
            "particle_numbers": {"up": self.particle_numbers[0], "down": self.particle_numbers[1]},
            "boson_cap": self.boson_cap,
            "sectors": [list(s) for s in self.sectors],
            "dimension": self.dim,
            "modes": [{"spin": m.spin.value, "n": list(m.n)} for m in enumerate_modes(self.grid)],
            "states": [list(s) for s in self.states],
        }

    def __repr__(self) -> str:
        return (
            f"FockBasis({self.statistics.value}, N={self.particle_numbers}, "
            f"sectors={len(self.sectors)}, dim={self.dim}, grid={self.grid})"
        )


def _spin_configurations(points: int, n: int, statistics: Statistics, cap: int):
    if statistics is Statistics.FERMI:
        for occ in itertools.combinations(range(points), n):
            row = [0] * points
            for i in occ:
                row[i] = 1
            yield tuple(row)
    else:
        # lexicographic compositions of n into ``points`` parts bounded by cap
        def rec(i, left):
            if i == points - 1:
                if left <= cap:
                    yield (left,)
                return
            for k in range(min(cap, left), -1, -1):
                for tail in rec(i + 1, left - k):
                    yield (k,) + tail

        if points == 0:
            return
        yield from rec(0, n)


def _sector_states(grid: GridSpec, statistics: Statistics, sector: Sector, cap: int):
    points = grid.points_per_spin
    limit = points if statistics is Statistics.FERMI else points * cap
    for s, n in zip(SPINS, sector):
        if n < 0:
            raise ValueError(f"negative particle number for spin {s.value}")
        if n > limit:
            raise ValueError(
                f"sector {sector} is empty: {n} {statistics.value} particles of spin {s.value} "
                f"do not fit into {points} modes" + ("" if statistics is Statistics.FERMI else f" with cap {cap}")
            )
    ups = list(_spin_configurations(points, sector[0], statistics, cap))
    downs = list(_spin_configurations(points, sector[1], statistics, cap))
    return [u + d for u, d in itertools.product(ups, downs)]


@lru_cache(maxsize=512)
def build_sectors(
    grid: GridSpec,
    statistics: Statistics,
    sectors: Tuple[Sector, ...],
    home: Optional[Sector] = None,
    boson_cap: int = 1,
) -> FockBasis:
    statistics = Statistics(statistics)
    if statistics is Statistics.BOSE and boson_cap < 1:
        raise ValueError("boson_cap must be >= 1")
    cap = boson_cap if statistics is Statistics.BOSE else 1
    states = []
    for sec in sectors:
        states.extend(_sector_states(grid, statistics, sec, cap))
    return FockBasis(grid, statistics, home if home is not None else sectors[0], cap, tuple(sectors), tuple(states))


def build_basis(grid: GridSpec, statistics="fermi", particle_numbers=(1, 0), boson_cap: int = 1) -> FockBasis:
    """Single fixed-particle-number sector, states in deterministic order."""
    sec = normalize_particle_numbers(particle_numbers)
    return build_sectors(grid, Statistics(statistics), (sec,), sec, int(boson_cap))


def build_ladder(grid: GridSpec, statistics, particle_numbers, spin, boson_cap: int = 1) -> FockBasis:
    """Home sector plus every sector reached by removing particles of ``spin``.

    This space is invariant under annihilators of ``spin`` and under all
    number-conserving bilinears, so products of them never leave it.
    """
    sec = normalize_particle_numbers(particle_numbers)
    s = Spin.parse(spin).index
    secs = []
    for n in range(sec[s], -1, -1):
        lowered = list(sec)
        lowered[s] = n
        secs.append(tuple(lowered))
    return build_sectors(grid, Statistics(statistics), tuple(secs), sec, int(boson_cap))


def build_fock_space(grid: GridSpec, statistics="fermi", boson_cap: int = 1, max_per_spin: Optional[int] = None) -> FockBasis:
    """Every sector up to ``max_per_spin`` particles per spin (all of them for fermions)."""
    statistics = Statistics(statistics)
    points = grid.points_per_spin
    if max_per_spin is None:
        if statistics is Statistics.BOSE:
            raise ValueError("bosonic Fock spaces need max_per_spin")
        max_per_spin = points
    secs = tuple((a, b) for a in range(max_per_spin + 1) for b in range(max_per_spin + 1))
    return build_sectors(grid, statistics, secs, (0, 0), int(boson_cap))


def shifted_basis(basis: FockBasis, spin: Spin, delta: int) -> FockBasis:
    if len(basis.sectors) != 1:
        return basis
    sec = list(basis.sectors[0])
    sec[spin.index] += delta
    if sec[spin.index] < 0:
        raise ValueError(f"no sector below {basis.sectors[0]} for spin {spin.value}")
    sec = tuple(sec)
    return build_sectors(basis.grid, basis.statistics, (sec,), sec, basis.boson_cap)


@dataclass(frozen=True)
class StateVector:
    basis: FockBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != self.basis.dim:
            raise ShapeError(f"{amps.shape[0]} amplitudes for a basis of dimension {self.basis.dim}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("non-finite amplitude")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis_state(cls, basis: FockBasis, state: Occupation) -> "StateVector":
        v = np.zeros(basis.dim, dtype=complex)
        v[basis.index[tuple(state)]] = 1.0
        return cls(basis, v)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def _check(self, other: "StateVector"):
        if not self.basis.same_space(other.basis):
            raise ShapeError("state vectors on different bases")

    def __add__(self, other: "StateVector") -> "StateVector":
        self._check(other)
        return StateVector(self.basis, self.amplitudes + other.amplitudes)

    def __sub__(self, other: "StateVector") -> "StateVector":
        self._check(other)
        return StateVector(self.basis, self.amplitudes - other.amplitudes)

    def __mul__(self, alpha) -> "StateVector":
        return StateVector(self.basis, alpha * self.amplitudes)

    __rmul__ = __mul__


def _clean(matrix) -> sp.csr_matrix:
    m = sp.csr_matrix(matrix, dtype=complex)
    m.eliminate_zeros()
    m.sort_indices()
    return m


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Complex sparse matrix from ``domain`` to ``codomain`` (rows index the codomain)."""

    domain: FockBasis
    codomain: FockBasis
    matrix: sp.csr_matrix

    def __post_init__(self):
        m = _clean(self.matrix)
        if m.shape != (self.codomain.dim, self.domain.dim):
            raise ShapeError(f"matrix shape {m.shape} does not match {self.codomain.dim}x{self.domain.dim}")
        object.__setattr__(self, "matrix", m)

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    @property
    def is_square(self) -> bool:
        return self.domain.same_space(self.codomain)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def _same_shape(self, other: "SparseOperator"):
        if not (self.domain.same_space(other.domain) and self.codomain.same_space(other.codomain)):
            raise ShapeError("operators act between different bases")

    def __add__(self, other):
        if isinstance(other, SparseOperator):
            self._same_shape(other)
            return SparseOperator(self.domain, self.codomain, self.matrix + other.matrix)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, SparseOperator):
            self._same_shape(other)
            return SparseOperator(self.domain, self.codomain, self.matrix - other.matrix)
        return NotImplemented

    def __neg__(self):
        return SparseOperator(self.domain, self.codomain, -self.matrix)

    def __mul__(self, alpha):
        if isinstance(alpha, SparseOperator):
            return NotImplemented
        return SparseOperator(self.domain, self.codomain, complex(alpha) * self.matrix)

    __rmul__ = __mul__

    def __truediv__(self, alpha):
        return SparseOperator(self.domain, self.codomain, self.matrix / complex(alpha))

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            return compose(self, other)
        if isinstance(other, StateVector):
            return apply(self, other)
        return NotImplemented

    @property
    def H(self) -> "SparseOperator":
        return adjoint(self)

    def restrict(self, columns=None, rows=None) -> np.ndarray:
        """Dense block with the given codomain rows and domain columns (index arrays)."""
        m = self.matrix
        if rows is not None:
            m = m[np.asarray(rows)]
        if columns is not None:
            m = m[:, np.asarray(columns)]
        return m.toarray()

    def __repr__(self) -> str:
        return f"SparseOperator({self.codomain.dim}x{self.domain.dim}, nnz={self.nnz})"


def identity(basis: FockBasis) -> SparseOperator:
    return SparseOperator(basis, basis, sp.identity(basis.dim, dtype=complex, format="csr"))


def zero_operator(domain: FockBasis, codomain: Optional[FockBasis] = None) -> SparseOperator:
    codomain = codomain or domain
    return SparseOperator(domain, codomain, sp.csr_matrix((codomain.dim, domain.dim), dtype=complex))


def adjoint(a: SparseOperator) -> SparseOperator:
    return SparseOperator(a.codomain, a.domain, a.matrix.conj().T)


def compose(a: SparseOperator, b: SparseOperator) -> SparseOperator:
    """``a @ b``: apply ``b`` first."""
    if not b.codomain.same_space(a.domain):
        raise ShapeError("cannot compose: codomain of the right factor is not the domain of the left one")
    return SparseOperator(b.domain, a.codomain, a.matrix @ b.matrix)


def commutator(a: SparseOperator, b: SparseOperator) -> SparseOperator:
    return compose(a, b) - compose(b, a)


def anticommutator(a: SparseOperator, b: SparseOperator) -> SparseOperator:
    return compose(a, b) + compose(b, a)


def operator_norm(a) -> float:
    """Largest singular value."""
    m = a.matrix if isinstance(a, SparseOperator) else a
    if sp.issparse(m):
        if m.nnz == 0:
            return 0.0
        if min(m.shape) <= DENSE_NORM_LIMIT:
            return float(np.linalg.norm(m.toarray(), 2))
        return float(spla.svds(m, k=1, return_singular_vectors=False)[0])
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def apply(a: SparseOperator, v: StateVector) -> StateVector:
    if not v.basis.same_space(a.domain):
        raise ShapeError("state vector does not live on the operator's domain")
    return StateVector(a.codomain, a.matrix @ v.amplitudes)


def _mode_position(basis: FockBasis, m: Union[Mode, int]) -> int:
    return m if isinstance(m, int) else mode_index(basis.grid, m)


def _remove(state: list, pos: int, fermi: bool):
    """Annihilate mode ``pos`` in place; returns the amplitude factor or 0."""
    n = state[pos]
    if n == 0:
        return 0
    state[pos] = n - 1
    if fermi:
        return -1 if sum(state[:pos]) % 2 else 1
    return math.sqrt(n)


def _add(state: list, pos: int, fermi: bool, cap: int):
    n = state[pos]
    if fermi:
        if n:
            return 0
        state[pos] = 1
        return -1 if sum(state[:pos]) % 2 else 1
    if n >= cap:
        return 0
    state[pos] = n + 1
    return math.sqrt(n + 1)


def _assemble(domain: FockBasis, codomain: FockBasis, rows, cols, vals) -> SparseOperator:
    m = sp.coo_matrix((np.asarray(vals, dtype=complex), (rows, cols)), shape=(codomain.dim, domain.dim))
    return SparseOperator(domain, codomain, m.tocsr())


def build_annihilation(basis_in: FockBasis, m: Union[Mode, int], target: Optional[FockBasis] = None) -> SparseOperator:
    """Matrix of ``c_m`` (``b_m`` for bosons).

    A single-sector basis maps onto the sector with one particle fewer; a
    multi-sector basis maps into itself (lowest sector goes to zero).
    """
    pos = _mode_position(basis_in, m)
    spin = SPINS[pos // basis_in.grid.points_per_spin]
    target = target if target is not None else shifted_basis(basis_in, spin, -1)
    fermi = basis_in.is_fermi
    rows, cols, vals = [], [], []
    for j, st in enumerate(basis_in.states):
        new = list(st)
        amp = _remove(new, pos, fermi)
        if amp == 0:
            continue
        i = target.index.get(tuple(new))
        if i is not None:
            rows.append(i)
            cols.append(j)
            vals.append(amp)
    return _assemble(basis_in, target, rows, cols, vals)


def build_creation(basis_in: FockBasis, m: Union[Mode, int], target: Optional[FockBasis] = None) -> SparseOperator:
    """Matrix of ``c†_m``; states pushed out of ``target`` (cap, top sector) are dropped."""
    pos = _mode_position(basis_in, m)
    spin = SPINS[pos // basis_in.grid.points_per_spin]
    if target is None:
        target = shifted_basis(basis_in, spin, +1) if len(basis_in.sectors) == 1 else basis_in
    fermi = basis_in.is_fermi
    rows, cols, vals = [], [], []
    for j, st in enumerate(basis_in.states):
        new = list(st)
        amp = _add(new, pos, fermi, basis_in.boson_cap)
        if amp == 0:
            continue
        i = target.index.get(tuple(new))
        if i is not None:
            rows.append(i)
            cols.append(j)
            vals.append(amp)
    return _assemble(basis_in, target, rows, cols, vals)


def build_bilinear(
    basis: FockBasis, terms: Iterable[Tuple[int, int, complex]], target: Optional[FockBasis] = None
) -> SparseOperator:
    """``sum amp * c†_to c_from`` over ``(to, from, amp)`` mode-index triples, built state by state."""
    target = target or basis
    fermi = basis.is_fermi
    terms = [(int(t), int(f), complex(a)) for t, f, a in terms if a != 0]
    acc: Dict[Tuple[int, int], complex] = {}
    for j, st in enumerate(basis.states):
        for to, frm, amp in terms:
            if st[frm] == 0:
                continue
            new = list(st)
            a1 = _remove(new, frm, fermi)
            a2 = _add(new, to, fermi, basis.boson_cap)
            if a2 == 0:
                continue
            i = target.index.get(tuple(new))
            if i is None:
                continue
            acc[(i, j)] = acc.get((i, j), 0) + amp * a1 * a2
    if not acc:
        return zero_operator(basis, target)
    keys = sorted(acc)
    return _assemble(basis, target, [k[0] for k in keys], [k[1] for k in keys], [acc[k] for k in keys])


def build_sector_shift(basis: FockBasis, spin, target: Optional[FockBasis] = None) -> SparseOperator:
    """Isometric part of the zero-momentum annihilator of ``spin``.

    For fermions this is ``c_{0,s}`` itself; for bosons it is
    ``b_0 (b†_0 b_0)^{-1/2}``.  It carries the c-number ``sqrt(N0)`` of the
    fluctuation field from sector N to sector N-1.
    """
    spin = Spin.parse(spin)
    zero = Mode(spin, (0,) * basis.grid.dim)
    op = build_annihilation(basis, zero, target)
    m = op.matrix.copy()
    m.data = m.data / np.abs(m.data)
    return SparseOperator(op.domain, op.codomain, m)


def car_violations(basis: FockBasis, modes: Optional[Sequence[int]] = None) -> Dict[str, float]:
    """Largest entrywise deviation of the canonical anticommutation relations.

    ``basis`` must be closed under creation (a full fermionic Fock space);
    otherwise the top sector spoils ``{c, c†}``.
    """
    modes = list(range(basis.n_modes)) if modes is None else list(modes)
    ann = {m: build_annihilation(basis, m) for m in modes}
    eye = identity(basis).matrix
    worst_cc_dag = worst_cc = 0.0
    for i in modes:
        for j in modes:
            ci, cj = ann[i].matrix, ann[j].matrix
            a = ci @ cj.conj().T + cj.conj().T @ ci
            if i == j:
                a = a - eye
            b = ci @ cj + cj @ ci
            worst_cc_dag = max(worst_cc_dag, _max_abs(a))
            worst_cc = max(worst_cc, _max_abs(b))
    return {"anticomm_c_cdag": worst_cc_dag, "anticomm_c_c": worst_cc}


def _max_abs(m) -> float:
    m = sp.csr_matrix(m)
    m.eliminate_zeros()
    return float(np.abs(m.data).max()) if m.nnz else 0.0
