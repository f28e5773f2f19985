"""Canonical conjugate of the density, the reconstructed field, and their checks.

Fourier conventions used throughout (all sign-sensitive code follows them):

    Pi_s(x)     = sum_q exp(i q.x) X_{q s}
    rho_s(y)    = (1/V) sum_k exp(-i k.y) rho(k, s)      (rho(k) = sum c†_{q+k} c_q)
    Phi(x s)    = sum_k phi(k s) exp(-i k.x)
    [X_q, rho_k] = i delta_{k,q}    <=>    [Pi(x), rho(y)] = i delta(x - y)

Real-space factors become translation series via exp(i k.x) -> T_{-k},
exp(-i k.x) -> T_k; reading off the coefficient of exp(i q.x) is
``evaluate_at_delta(series, q)``.

Every expansion is graded by the number of fluctuation operators
(delta psi, delta rho, delta j, phi); "order" is the highest degree kept.
X_0 is zero by construction.

The c-number sqrt(N0) of the field is carried from sector N to N-1 by the
sector shift ``E_s`` (isometric part of the zero-momentum annihilator).  The
current-form X and everything in the reconstructed field except the final
``E_s`` conserve particle number and are built on the home sector alone.
The psi-form X contains delta psi and is built on the ladder of sectors
N, N-1, ..., 0 of the spin involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .bilinears import (
    build_current,
    build_delta_psi,
    build_delta_rho,
    build_density,
    build_field,
    home_count,
)
from .fock_core import (
    FockBasis,
    SparseOperator,
    build_ladder,
    build_sector_shift,
    commutator,
    operator_norm,
    shifted_basis,
    zero_operator,
)
from .lattice import SPINS, GridSpec, Spin
from .phase import PhaseFunctional
from .transeries import (
    CONVERGENCE_TOL,
    GradedSeries,
    TransSeries,
    exp_function,
    log_function,
    power_function,
    series_apply_function,
)

IntVec = Tuple[int, ...]

PSI_FORM = "psi"
CURRENT_FORM = "current"


def _vec(q, grid: GridSpec) -> IntVec:
    q = (q,) if isinstance(q, int) else tuple(int(c) for c in q)
    if len(q) != grid.dim:
        raise ValueError(f"momentum {q} does not match grid dimension {grid.dim}")
    return grid.fold(q) if grid.wrap else q


def _neg(q: IntVec) -> IntVec:
    return tuple(-c for c in q)


def _is_zero(q: IntVec) -> bool:
    return not any(q)


def conjugate_labels(grid: GridSpec) -> Tuple[IntVec, ...]:
    """Momenta q with X_q != 0 possible (zero excluded)."""
    return tuple(q for q in grid.transfers() if any(q))


class _Builder:
    """Operator-coefficient series on one space with consistent offset handling."""

    def __init__(self, space: FockBasis, order: int):
        self.space = space
        self.grid = space.grid
        self.order = int(order)
        self.zero = zero_operator(space)
        if self.grid.wrap:
            self.period, self.max_offset = self.grid.side, None
        else:
            # widest offset any kept product can reach; nothing inside is ever dropped
            self.period, self.max_offset = None, 2 * self.grid.n_max * (self.order + 2)

    def series(self, coeffs: Dict[IntVec, SparseOperator]) -> TransSeries:
        return TransSeries(
            {k: v for k, v in coeffs.items() if v.nnz},
            dim=self.grid.dim,
            kind="operator",
            max_offset=self.max_offset,
            period=self.period,
            zero=self.zero,
        )

    def graded(self, components: Dict[int, TransSeries]) -> GradedSeries:
        return GradedSeries(components, self.order, self.series({}))

    def unit(self) -> GradedSeries:
        return self.graded({}).unit()

    def linear(self, coeffs: Dict[IntVec, SparseOperator], degree: int = 1) -> GradedSeries:
        return self.graded({degree: self.series(coeffs)})


# ---------------------------------------------------------------------------
# X operators


@dataclass(eq=False)
class XOperator:
    q: IntVec
    spin: Spin
    order: int
    form: str
    components: Dict[int, SparseOperator]
    evaluated: SparseOperator
    series_form: Optional[GradedSeries] = None
    flags: List[str] = field(default_factory=list)

    @property
    def space(self) -> FockBasis:
        return self.evaluated.domain

    @property
    def convergence_gap(self) -> float:
        """Norm of the highest-degree component: the change from order-1 to order."""
        top = self.components.get(self.order)
        return operator_norm(top) if top is not None else 0.0


@dataclass(eq=False)
class XFamily:
    """All X_q of one construction at one order, sharing a single series build."""

    form: str
    spin: Spin
    order: int
    space: FockBasis
    home: FockBasis
    operators: Dict[IntVec, XOperator]
    series_form: Optional[GradedSeries] = None

    def __getitem__(self, q) -> XOperator:
        q = _vec(q, self.space.grid)
        if _is_zero(q):
            z = zero_operator(self.space)
            return XOperator(q, self.spin, self.order, self.form, {}, z)
        if q not in self.operators:
            z = zero_operator(self.space)
            return XOperator(q, self.spin, self.order, self.form, {}, z)
        return self.operators[q]

    def labels(self) -> Tuple[IntVec, ...]:
        return tuple(self.operators)


def _split(value, degrees) -> Dict[int, SparseOperator]:
    return {d: v for d, v in zip(degrees, value) if v.nnz}


def _family_from_series(series: GradedSeries, labels, spin, order, form, space, home, scale: complex) -> XFamily:
    ops = {}
    for q in labels:
        comps = {d: scale * op for d, op in series.evaluate_by_degree(q).items() if op.nnz}
        total = zero_operator(space)
        for op in comps.values():
            total = total + op
        x = XOperator(q, spin, order, form, comps, total, series)
        if x.convergence_gap >= CONVERGENCE_TOL and order > 0:
            x.flags.append("not_converged")
        ops[q] = x
    return XFamily(form, spin, order, space, home, ops, series)


@lru_cache(maxsize=64)
def _psi_family(home: FockBasis, spin: Spin, phi: PhaseFunctional, order: int) -> XFamily:
    grid = home.grid
    n0 = home_count(home, spin)
    if n0 < 1:
        raise ValueError("the psi-form X needs N_s^0 >= 1")
    ladder = build_ladder(grid, home.statistics, home.particle_numbers, spin, home.boson_cap)
    b = _Builder(ladder, order)
    one = b.unit()
    if order == 0:
        return XFamily(PSI_FORM, spin, 0, ladder, home, {q: XOperator(q, spin, 0, PSI_FORM, {}, b.zero) for q in conjugate_labels(grid)})

    # 1 + (1/sqrt N0) sum_k delta psi(k) T_{-k}
    dpsi = {_neg(k): build_delta_psi(ladder, k, spin, target=ladder) / math.sqrt(n0) for k in grid.points}
    factor_psi = one + b.linear(dpsi)
    # (1 + (1/N0) sum_k delta rho(k) T_k)^(-1/2)
    drho = {k: build_delta_rho(ladder, k, spin) / n0 for k in grid.transfers()}
    factor_rho = series_apply_function(power_function(-0.5, 1.0, order + 1), one + b.linear(drho), order)
    # exp(-i sum_k phi(k) T_k)
    phis = {k: -1j * phi.phi_operator(ladder, k, spin) for k in grid.transfers() if not _is_zero(k)}
    factor_phi = series_apply_function(exp_function(order + 1), b.linear(phis), order)

    product = factor_psi * factor_rho * factor_phi
    log = series_apply_function(log_function(1.0, order + 1), product, order)
    return _family_from_series(log, conjugate_labels(grid), spin, order, PSI_FORM, ladder, home, 1j)


def f_term_tables(phi: PhaseFunctional, grid: GridSpec) -> dict:
    """Fourier data of ``F = grad Phi - [-i Phi, grad Pi]`` for a linear Phi.

    The gradient part at label q is ``i q U0(-q) rho(-q)`` (tabulated by its
    scalar prefactor).  With ``[X_p, rho_k] = i delta_{k,p}`` the commutator is
    the constant ``-i sum_k k U0(k)``, which only feeds the q = 0 label.
    """
    grad = {}
    for q in conjugate_labels(grid):
        u = phi.coefficient(_neg(q))
        grad[q] = [1j * c * u for c in grid.momentum(q)]
    comm = [0j] * grid.dim
    for k in conjugate_labels(grid):
        u = phi.coefficient(k)
        for i, c in enumerate(grid.momentum(k)):
            comm[i] += -1j * c * u
    return {"gradient_prefactor": grad, "commutator_constant": comm}


@lru_cache(maxsize=64)
def _current_family(home: FockBasis, spin: Spin, phi: PhaseFunctional, order: int) -> XFamily:
    if not phi.is_linear:
        raise ValueError(
            "the current-form X is only implemented for a phase functional linear in rho; "
            f"got form {phi.form.value!r}"
        )
    grid = home.grid
    n0 = home_count(home, spin)
    if n0 < 1:
        raise ValueError("the current-form X needs N_s^0 >= 1")
    b = _Builder(home, order)
    labels = conjugate_labels(grid)
    if order == 0:
        return XFamily(CURRENT_FORM, spin, 0, home, home, {q: XOperator(q, spin, 0, CURRENT_FORM, {}, b.zero) for q in labels})

    one = b.unit()
    drho = {k: build_delta_rho(home, k, spin) / n0 for k in grid.transfers()}
    inverse = series_apply_function(power_function(-1.0, 1.0, order + 1), one + b.linear(drho), order)
    currents = {p: [build_current(home, p, spin, c) for c in range(grid.dim)] for p in grid.transfers()}
    ops = {}
    for q in labels:
        qp = grid.momentum(q)
        q2 = sum(c * c for c in qp)
        jq = {}
        for p, comps in currents.items():
            acc = b.zero
            for c, j in enumerate(comps):
                if qp[c]:
                    acc = acc + qp[c] * j
            jq[p] = acc
        y = inverse * b.linear(jq)
        comps = {d: (1j / (q2 * n0)) * op for d, op in y.evaluate_by_degree(q).items() if op.nnz}
        # -i q.F / q^2 with F(q) = i q U0(-q) rho(-q): a degree-1 term U0(-q) rho(-q)
        f_op = phi.phi_operator(home, _neg(q), spin)
        if f_op.nnz:
            comps[1] = comps.get(1, b.zero) + f_op
        total = b.zero
        for op in comps.values():
            total = total + op
        x = XOperator(q, spin, order, CURRENT_FORM, comps, total, y)
        if x.convergence_gap >= CONVERGENCE_TOL:
            x.flags.append("not_converged")
        ops[q] = x
    return XFamily(CURRENT_FORM, spin, order, home, home, ops)


def x_family(basis: FockBasis, s, phi: PhaseFunctional, order: int, form: str = CURRENT_FORM) -> XFamily:
    spin = Spin.parse(s)
    if len(basis.sectors) != 1:
        raise ValueError("X operators are built from a single home sector")
    if form == PSI_FORM:
        return _psi_family(basis, spin, phi, int(order))
    if form == CURRENT_FORM:
        return _current_family(basis, spin, phi, int(order))
    raise ValueError(f"unknown X construction {form!r}")


def build_X_psi_form(basis: FockBasis, q, s, phi: PhaseFunctional, order: int) -> XOperator:
    q = _vec(q, basis.grid)
    if _is_zero(q):
        raise ValueError("X_0 is fixed to zero; ask for q != 0")
    return x_family(basis, s, phi, order, PSI_FORM)[q]


def build_X_current_form(basis: FockBasis, q, s, phi: PhaseFunctional, order: int) -> XOperator:
    q = _vec(q, basis.grid)
    if _is_zero(q):
        raise ValueError("X_0 is fixed to zero; ask for q != 0")
    return x_family(basis, s, phi, order, CURRENT_FORM)[q]


def hermiticity_gap(family: XFamily, q) -> float:
    """``||X_q† - X_{-q}||``: reported, never asserted."""
    q = _vec(q, family.space.grid)
    return operator_norm(family[q].evaluated.H - family[_vec(_neg(q), family.space.grid)].evaluated)


def home_block(op: SparseOperator, home: FockBasis) -> np.ndarray:
    """Columns of ``op`` belonging to the home sector (all rows kept)."""
    cols = op.domain.sector_indices(home.particle_numbers)
    return op.restrict(columns=cols)


def x_form_distance(home: FockBasis, q, s, phi: PhaseFunctional, order: int) -> float:
    """Operator-norm distance between the two X constructions on the home sector."""
    xc = build_X_current_form(home, q, s, phi, order).evaluated
    xp = build_X_psi_form(home, q, s, phi, order).evaluated
    ladder = xp.domain
    idx = ladder.sector_indices(home.particle_numbers)
    psi_block = xp.restrict(columns=idx)
    # psi-form columns land in all ladder sectors; compare the home rows and count the rest as error
    full = np.zeros_like(psi_block)
    full[idx, :] = xc.toarray()
    return operator_norm(psi_block - full)


# ---------------------------------------------------------------------------
# reconstructed field


def _psi_tilde_series(family: XFamily, phi: PhaseFunctional, order: int) -> GradedSeries:
    space = family.space
    grid = space.grid
    spin = family.spin
    n0 = home_count(family.home, spin)
    b = _Builder(space, order)
    one = b.unit()
    # exp(-i sum_q T_{-q} X_q), graded by the degrees already inside each X_q
    comps: Dict[int, Dict[IntVec, SparseOperator]] = {}
    for q, x in family.operators.items():
        for d, op in x.components.items():
            comps.setdefault(d, {})[_neg(q)] = -1j * op
    arg_x = b.graded({d: b.series(c) for d, c in comps.items()})
    factor_x = series_apply_function(exp_function(order + 1), arg_x, order)
    # exp(i sum_q T_q phi(q))
    phis = {k: 1j * phi.phi_operator(space, k, spin) for k in grid.transfers() if not _is_zero(k)}
    factor_phi = series_apply_function(exp_function(order + 1), b.linear(phis), order)
    # (N0 + sum_q delta rho(q) T_q)^(1/2) = sqrt(N0) (1 + ...)^(1/2)
    drho = {k: build_delta_rho(space, k, spin) / n0 for k in grid.transfers()}
    factor_rho = math.sqrt(n0) * series_apply_function(power_function(0.5, 1.0, order + 1), one + b.linear(drho), order)
    return factor_x * factor_phi * factor_rho


@dataclass(eq=False)
class PsiTilde:
    k: IntVec
    spin: Spin
    order: int
    operator: SparseOperator  # home sector -> sector N-1 (or the ladder for the psi-form route)
    unembedded: SparseOperator  # series value before the sector shift
    x_form: str


def build_psi_tilde(
    basis: FockBasis, k, s, phi: PhaseFunctional, order: int, x_form: str = CURRENT_FORM
) -> PsiTilde:
    """Series reconstruction of ``psi(k, s)`` from X, phi and delta rho.

    With the current-form X the series conserves particle number; the sector
    shift ``E_s`` then lowers it, so the result maps the home sector to N-1
    exactly like ``c_{k,s}``.  With ``x_form="psi"`` the series already lowers
    and is returned on the ladder without a shift.
    """
    spin = Spin.parse(s)
    k = _vec(k, basis.grid)
    fam = x_family(basis, spin, phi, order, x_form)
    value = _psi_tilde_cached(fam, phi, order).evaluate_at_delta(k)
    if x_form == PSI_FORM:
        return PsiTilde(k, spin, order, value, value, x_form)
    lowered = shifted_basis(basis, spin, -1)
    shift = build_sector_shift(basis, spin, lowered)
    return PsiTilde(k, spin, order, shift @ value, value, x_form)


@lru_cache(maxsize=64)
def _psi_tilde_cached(family: XFamily, phi: PhaseFunctional, order: int) -> GradedSeries:
    return _psi_tilde_series(family, phi, order)


# ---------------------------------------------------------------------------
# verification


@dataclass
class CommutatorRecord:
    q: IntVec
    k: IntVec
    spin: str
    spin_prime: str
    order: int
    form: str
    target: complex
    deviation: float

    def to_json(self) -> dict:
        return {
            "q": list(self.q),
            "k": list(self.k),
            "spin": self.spin,
            "spin_prime": self.spin_prime,
            "order": self.order,
            "form": self.form,
            "target_re": self.target.real,
            "target_im": self.target.imag,
            "deviation": self.deviation,
        }


def verify_canonical_commutator(
    x: XOperator, basis: FockBasis, k_list: Optional[Iterable] = None, spins: Iterable = SPINS
) -> List[CommutatorRecord]:
    """``||[X_q, rho(k, s')] - i delta_{s s'} delta_{k q} 1||`` on home-sector columns."""
    space = x.space
    grid = space.grid
    k_list = grid.points if k_list is None else [_vec(k, grid) for k in k_list]
    cols = space.sector_indices(basis.particle_numbers)
    out = []
    for sp in spins:
        sp = Spin.parse(sp)
        for k in k_list:
            k = _vec(k, grid)
            c = commutator(x.evaluated, build_density(space, k, sp)).restrict(columns=cols)
            target = 1j if (sp is x.spin and k == x.q) else 0j
            if target:
                c[cols, np.arange(len(cols))] -= target
            out.append(CommutatorRecord(x.q, k, x.spin.value, sp.value, x.order, x.form, target, operator_norm(c)))
    return out


def canonical_sweep(
    basis: FockBasis, s, phi: PhaseFunctional, orders: Sequence[int], form: str, spins: Iterable = (None,)
) -> List[CommutatorRecord]:
    """Commutator deviations for every (q, k) pair at every order."""
    spin = Spin.parse(s)
    spins = [spin if sp is None else Spin.parse(sp) for sp in spins]
    records = []
    for order in orders:
        fam = x_family(basis, spin, phi, order, form)
        for q in conjugate_labels(basis.grid):
            if q not in basis.grid.points and basis.grid.wrap:
                continue
            records.extend(verify_canonical_commutator(fam[q], basis, None, spins))
    return records


def max_by_order(records: Iterable, value: str = "deviation") -> Dict[int, float]:
    out: Dict[int, float] = {}
    for r in records:
        v = getattr(r, value)
        out[r.order] = max(out.get(r.order, 0.0), v)
    return dict(sorted(out.items()))


def non_increasing(values: Sequence[float], slack: float = 1e-12) -> bool:
    return all(b <= a + slack * max(1.0, abs(a)) for a, b in zip(values, values[1:]))


@dataclass
class ConjectureRecord:
    k: IntVec
    order: int
    residual: float
    flags: List[str]

    def to_json(self) -> dict:
        return {"k": list(self.k), "order": self.order, "residual": self.residual, "flags": list(self.flags)}


@dataclass
class ConjectureReport:
    sector: Tuple[int, int]
    spin: str
    statistics: str
    records: List[ConjectureRecord]
    monotone: Dict[IntVec, bool]
    passed: Dict[IntVec, Optional[bool]]
    tol: Optional[float]

    def table(self) -> Dict[IntVec, Dict[int, float]]:
        out: Dict[IntVec, Dict[int, float]] = {}
        for r in self.records:
            out.setdefault(r.k, {})[r.order] = r.residual
        return out

    @property
    def all_monotone(self) -> bool:
        return all(self.monotone.values())

    def to_json(self) -> dict:
        return {
            "sector": list(self.sector),
            "spin": self.spin,
            "statistics": self.statistics,
            "tol": self.tol,
            "records": [r.to_json() for r in self.records],
            "monotone": [{"k": list(k), "value": v} for k, v in self.monotone.items()],
            "passed": [{"k": list(k), "value": v} for k, v in self.passed.items()],
        }


def conjecture_residual(basis: FockBasis, k, s, phi: PhaseFunctional, order: int) -> Tuple[float, List[str]]:
    pt = build_psi_tilde(basis, k, s, phi, order)
    psi = build_field(basis, pt.k, pt.spin, pt.operator.codomain)
    flags = []
    fam = x_family(basis, pt.spin, phi, order, CURRENT_FORM)
    if any("not_converged" in x.flags for x in fam.operators.values()):
        flags.append("x_not_converged")
    return operator_norm(pt.operator - psi), flags


def verify_conjecture(
    basis: FockBasis,
    k_list: Optional[Iterable],
    s,
    phi: PhaseFunctional,
    order_list: Sequence[int],
    tol: Optional[float] = None,
) -> ConjectureReport:
    """Residual ``||psi~(k, s) - psi(k, s)||`` on the home sector, per k and order.

    A monotonicity verdict per k says whether the residual never grows with
    order; ``passed`` compares the residual at the largest order with ``tol``
    (``None`` when no tolerance is configured).  Nothing here proves anything.
    """
    spin = Spin.parse(s)
    grid = basis.grid
    k_list = grid.points if k_list is None else [_vec(k, grid) for k in k_list]
    orders = sorted(order_list)
    records = []
    for k in k_list:
        for order in orders:
            res, flags = conjecture_residual(basis, k, spin, phi, order)
            records.append(ConjectureRecord(k, order, res, flags))
    report = ConjectureReport(basis.particle_numbers, spin.value, basis.statistics.value, records, {}, {}, tol)
    for k, row in report.table().items():
        vals = [row[o] for o in orders]
        report.monotone[k] = non_increasing(vals)
        report.passed[k] = None if tol is None else bool(vals[-1] <= tol)
    return report
