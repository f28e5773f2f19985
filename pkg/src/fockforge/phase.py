"""High-density phase functional and the deletion recursion it is meant to satisfy.

The fermionic high-density functional is linear in the density,

    Phi([rho]; x) = sum_{q != 0} rho_q U0(q) exp(-i q.x),

with ``rho_q = sum_particles exp(i q.y)`` for a classical configuration and
``rho_q = rho(q, s)`` as an operator.  The bosonic one is identically zero.

``epsilon_q = q^2 / (2 m)`` (free dispersion) and the Fermi sea is the closed
ball ``|k| <= k_f``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

from .bilinears import build_density
from .fock_core import FockBasis, SparseOperator, Statistics, zero_operator
from .lattice import GridSpec, Spin

IntVec = Tuple[int, ...]

# grid momenta are multiples of 2 pi / L; comparisons with k_f get a little slack
_EDGE = 1e-9


class PhaseForm(str, Enum):
    ZERO = "zero"
    LINEAR = "linear_in_rho"
    CUSTOM = "custom"


@dataclass(frozen=True)
class FermiParams:
    k_f: float
    mass: float = 1.0
    N: Optional[int] = None
    grid: GridSpec = field(default_factory=GridSpec)

    def __post_init__(self):
        if not self.k_f > 0:
            raise ValueError("k_f must be positive")
        if not self.mass > 0:
            raise ValueError("mass must be positive")

    def occupied(self, p: Sequence[float]) -> bool:
        return math.sqrt(sum(c * c for c in p)) <= self.k_f * (1 + _EDGE)

    def sea(self) -> List[IntVec]:
        return [n for n in self.grid.points if self.occupied(self.grid.momentum(n))]

    @property
    def particle_count(self) -> int:
        return self.N if self.N is not None else len(self.sea())

    def to_json(self) -> dict:
        return {"k_f": self.k_f, "mass": self.mass, "N": self.particle_count, "grid": self.grid.to_json()}


@dataclass(frozen=True)
class PhaseRow:
    q: IntVec
    w1: float
    w2: float
    theta: int
    radicand: Optional[float]
    U0: Optional[float]
    status: str  # "ok", "excluded" (q = 0), "w2_zero", "negative_radicand"

    def to_json(self) -> dict:
        return {
            "q": list(self.q),
            "w1": self.w1,
            "w2": self.w2,
            "theta": self.theta,
            "radicand": self.radicand,
            "U0": self.U0,
            "status": self.status,
        }


@dataclass(frozen=True, eq=False)
class PhaseFunctional:
    form: PhaseForm
    U0: Dict[IntVec, float]
    fermi_params: Optional[FermiParams] = None
    table: Tuple[PhaseRow, ...] = ()

    @classmethod
    def zero(cls) -> "PhaseFunctional":
        return cls(PhaseForm.ZERO, {})

    @property
    def is_linear(self) -> bool:
        return self.form in (PhaseForm.ZERO, PhaseForm.LINEAR)

    def coefficient(self, q: Sequence[int]) -> float:
        """U0(q); zero at q = 0 and wherever U0 is undefined."""
        q = tuple(q)
        if not any(q):
            return 0.0
        return self.U0.get(q, 0.0)

    def evaluate(self, rho_q: Dict[IntVec, complex], x: Sequence[float], grid: GridSpec) -> complex:
        """Phi([rho]; x) for Fourier components ``rho_q`` of a classical density."""
        if self.form is PhaseForm.ZERO:
            return 0j
        if not self.is_linear:
            raise ValueError("only linear phase functionals can be evaluated")
        total = 0j
        for q, u in self.U0.items():
            if not any(q) or u == 0:
                continue
            qx = sum(a * b for a, b in zip(grid.momentum(q), x))
            total += rho_q.get(q, 0) * u * cmath.exp(-1j * qx)
        return total

    def phi_operator(self, basis: FockBasis, k, s) -> SparseOperator:
        """Operator Fourier coefficient ``phi([rho]; k s) = U0(k) rho(k, s)``."""
        u = self.coefficient(k)
        if u == 0:
            return zero_operator(basis)
        return u * build_density(basis, k, s)

    def to_json(self) -> dict:
        return {
            "form": self.form.value,
            "U0": [{"q": list(q), "value": v} for q, v in sorted(self.U0.items())],
            "fermi_params": self.fermi_params.to_json() if self.fermi_params else None,
        }


def fermi_weight(params: FermiParams, k: Sequence[float], q: Sequence[float]) -> int:
    """Lambda_k(q) = n_F(k + q/2) (1 - n_F(k - q/2)), momenta in physical units."""
    plus = [a + b / 2 for a, b in zip(k, q)]
    minus = [a - b / 2 for a, b in zip(k, q)]
    return int(params.occupied(plus)) * (1 - int(params.occupied(minus)))


def phase_row(params: FermiParams, q: IntVec) -> PhaseRow:
    grid = params.grid
    N = params.particle_count
    qp = grid.momentum(q)
    neg_q = tuple(-c for c in qp)
    q2 = sum(c * c for c in qp)
    s1 = s2 = 0.0
    for n in grid.points:
        kp = grid.momentum(n)
        lam = fermi_weight(params, kp, neg_q)
        if lam:
            kq = sum(a * b for a, b in zip(kp, qp))
            s1 += (kq / params.mass) ** 2 * lam * lam
            s2 += lam * lam
    w2 = s2 / N
    theta = int(params.k_f - math.sqrt(q2) >= -_EDGE * params.k_f)
    if not any(q):
        return PhaseRow(q, 0.0, w2, theta, None, None, "excluded")
    eps = q2 / (2 * params.mass)
    w1 = s1 / (4 * N * eps * eps)
    if w2 == 0:
        return PhaseRow(q, w1, w2, theta, None, None, "w2_zero")
    rad = (theta - w1) / w2
    if rad < 0:
        return PhaseRow(q, w1, w2, theta, rad, None, "negative_radicand")
    return PhaseRow(q, w1, w2, theta, rad, math.sqrt(rad) / N, "ok")


def build_phase_hd(params: FermiParams, statistics: str = "fermi") -> PhaseFunctional:
    """Tabulate Lambda, w1, w2 and U0 over every momentum transfer of the grid.

    Transfers where U0 is undefined stay in the table with their status and
    contribute nothing to Phi; nothing is clamped.
    """
    if Statistics(statistics) is Statistics.BOSE:
        return PhaseFunctional(PhaseForm.ZERO, {}, params)
    if not params.sea():
        raise ValueError("the Fermi sea contains no grid point; refine the grid or raise k_f")
    rows = tuple(phase_row(params, q) for q in params.grid.transfers())
    u0 = {r.q: r.U0 for r in rows if r.status == "ok"}
    return PhaseFunctional(PhaseForm.LINEAR, u0, params, rows)


# ---------------------------------------------------------------------------
# recursion


Particle = Tuple[Sequence[float], Spin]


@dataclass(frozen=True)
class RecursionResult:
    raw: complex
    residual: complex
    m: int
    parity_ok: bool
    expected_parity: str

    def to_json(self) -> dict:
        return {
            "raw_re": self.raw.real,
            "raw_im": self.raw.imag,
            "residual_re": self.residual.real,
            "residual_im": self.residual.imag,
            "m": self.m,
            "parity_ok": self.parity_ok,
            "expected_parity": self.expected_parity,
        }


def density_components(particles: Sequence[Particle], spin: Spin, grid: GridSpec) -> Dict[IntVec, complex]:
    """rho_q = sum over particles of ``spin`` of exp(i q.y), for every transfer q."""
    spin = Spin.parse(spin)
    out = {}
    for q in grid.transfers():
        qp = grid.momentum(q)
        out[q] = sum(
            cmath.exp(1j * sum(a * b for a, b in zip(qp, y))) for y, s in particles if Spin.parse(s) is spin
        )
    return out


def _delete(rho: Dict[IntVec, complex], at: Sequence[float], grid: GridSpec) -> Dict[IntVec, complex]:
    out = {}
    for q, v in rho.items():
        qp = grid.momentum(q)
        out[q] = v - cmath.exp(1j * sum(a * b for a, b in zip(qp, at)))
    return out


def recursion_residual(
    phi: PhaseFunctional,
    rho_config: Sequence[Particle],
    x: Sequence[float],
    x_prime: Sequence[float],
    sigma,
    sigma_prime,
    grid: GridSpec,
    statistics: str = "fermi",
) -> RecursionResult:
    """Phi([rho - delta_{x'}]; x) + Phi([rho]; x') - Phi([rho]; x) - Phi([rho - delta_x]; x'), minus the nearest m pi."""
    sigma, sigma_prime = Spin.parse(sigma), Spin.parse(sigma_prime)
    rho_s = density_components(rho_config, sigma, grid)
    rho_sp = density_components(rho_config, sigma_prime, grid)
    # deleting a particle only touches the density of its own spin
    rho_s_minus = _delete(rho_s, x_prime, grid) if sigma is sigma_prime else rho_s
    rho_sp_minus = _delete(rho_sp, x, grid) if sigma is sigma_prime else rho_sp
    raw = (
        phi.evaluate(rho_s_minus, x, grid)
        + phi.evaluate(rho_sp, x_prime, grid)
        - phi.evaluate(rho_s, x, grid)
        - phi.evaluate(rho_sp_minus, x_prime, grid)
    )
    m = int(round(raw.real / math.pi))
    residual = raw - m * math.pi
    expected = "even" if Statistics(statistics) is Statistics.BOSE else "odd"
    parity_ok = (m % 2 == 0) == (expected == "even")
    return RecursionResult(complex(raw), complex(residual), m, parity_ok, expected)


def recursion_closed_form(phi: PhaseFunctional, x: Sequence[float], x_prime: Sequence[float], grid: GridSpec) -> complex:
    """sum_q U0(q) (exp(i q.(x-x')) - exp(-i q.(x-x'))) for equal spins and linear Phi."""
    total = 0j
    d = [a - b for a, b in zip(x, x_prime)]
    for q, u in phi.U0.items():
        if not any(q):
            continue
        qd = sum(a * b for a, b in zip(grid.momentum(q), d))
        total += u * (cmath.exp(1j * qd) - cmath.exp(-1j * qd))
    return total
