"""Experiment configs, registered verification suites, and deterministic reports.

A suite is either *exact* (a finite-dimensional identity: any miss fails the
run) or *measured* (a truncation residual: reported, and only failing the run
when the config sets a tolerance for it).  Jobs inside a suite run on a
thread pool; results are merged in job order, so reports do not depend on
scheduling.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy

from . import __version__, tensor
from .bilinears import build_current, build_density, build_field
from .dpva import (
    CURRENT_FORM,
    PSI_FORM,
    build_psi_tilde,
    canonical_sweep,
    conjugate_labels,
    hermiticity_gap,
    non_increasing,
    verify_conjecture,
    x_family,
    x_form_distance,
)
from .fock_core import (
    Statistics,
    build_annihilation,
    build_basis,
    build_creation,
    build_fock_space,
    car_violations,
    commutator,
    operator_norm,
)
from .lattice import SPINS, GridSpec, Mode, Spin, enumerate_modes, mode_index
from .oracles import first_quantized_current, lambda_at_zero, phase_tables_exact
from .phase import (
    FermiParams,
    PhaseFunctional,
    build_phase_hd,
    recursion_closed_form,
    recursion_residual,
)
from .transeries import lemma_check, random_lemma_instance

SCHEMA_VERSION = 1
EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

CONFIG_KEYS = {"grid", "statistics", "particle_numbers", "boson_cap", "phase", "checks", "output", "seed", "workers"}
CHECK_KEYS = {"name", "k_list", "q_list", "order_list", "tolerance", "params"}
PHASE_KEYS = {"kind", "k_f", "mass", "N"}
OUTPUT_KEYS = {"report", "csv"}


class ConfigError(ValueError):
    """A config problem; the message names the offending key."""


# ---------------------------------------------------------------------------
# config


@dataclass(frozen=True)
class CheckSpec:
    name: str
    k_list: Optional[Tuple[Tuple[int, ...], ...]] = None
    q_list: Optional[Tuple[Tuple[int, ...], ...]] = None
    order_list: Tuple[int, ...] = (1, 2, 3, 4)
    tolerance: Optional[float] = None
    params: Dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "k_list": [list(k) for k in self.k_list] if self.k_list is not None else None,
            "q_list": [list(q) for q in self.q_list] if self.q_list is not None else None,
            "order_list": list(self.order_list),
            "tolerance": self.tolerance,
            "params": self.params,
        }


@dataclass(frozen=True)
class PhaseSpec:
    kind: str = "hd"  # "hd" (high density, zero for bosons) or "zero"
    k_f: float = 1.0
    mass: float = 1.0
    N: Optional[int] = None

    def to_json(self) -> dict:
        return {"kind": self.kind, "k_f": self.k_f, "mass": self.mass, "N": self.N}


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridSpec = field(default_factory=GridSpec)
    statistics: Statistics = Statistics.FERMI
    particle_numbers: Tuple[int, int] = (1, 0)
    boson_cap: int = 1
    phase: PhaseSpec = field(default_factory=PhaseSpec)
    checks: Tuple[CheckSpec, ...] = ()
    output: Dict[str, str] = field(default_factory=dict)
    seed: int = 0
    workers: Optional[int] = None

    def to_json(self) -> dict:
        return {
            "grid": self.grid.to_json(),
            "statistics": self.statistics.value,
            "particle_numbers": list(self.particle_numbers),
            "boson_cap": self.boson_cap,
            "phase": self.phase.to_json(),
            "checks": [c.to_json() for c in self.checks],
            "seed": self.seed,
        }


def _momentum_list(value, key: str):
    if value is None:
        return None
    if not isinstance(value, list):
        raise ConfigError(f"{key}: expected a list of momenta")
    out = []
    for v in value:
        if isinstance(v, int):
            out.append((v,))
        elif isinstance(v, list) and all(isinstance(c, int) for c in v):
            out.append(tuple(v))
        else:
            raise ConfigError(f"{key}: momentum {v!r} is not an integer or a list of integers")
    return tuple(out)


def _unknown(data: dict, allowed: set, where: str):
    extra = sorted(set(data) - allowed)
    if extra:
        raise ConfigError(f"{where}: unknown key {extra[0]!r}")


def parse_check(data, index: int) -> CheckSpec:
    where = f"checks[{index}]"
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    _unknown(data, CHECK_KEYS, where)
    if "name" not in data:
        raise ConfigError(f"{where}.name: missing")
    name = data["name"]
    if name not in SUITES:
        raise ConfigError(f"{where}.name: unknown check {name!r}; registered: {', '.join(SUITES)}")
    orders = data.get("order_list", [1, 2, 3, 4])
    if not isinstance(orders, list) or not orders or not all(isinstance(o, int) and o >= 0 for o in orders):
        raise ConfigError(f"{where}.order_list: expected a nonempty list of non-negative integers")
    if orders != sorted(set(orders)):
        raise ConfigError(f"{where}.order_list: must be strictly ascending")
    tol = data.get("tolerance")
    if tol is not None and not (isinstance(tol, (int, float)) and tol >= 0):
        raise ConfigError(f"{where}.tolerance: expected a non-negative number")
    params = data.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError(f"{where}.params: expected an object")
    return CheckSpec(
        name,
        _momentum_list(data.get("k_list"), f"{where}.k_list"),
        _momentum_list(data.get("q_list"), f"{where}.q_list"),
        tuple(orders),
        None if tol is None else float(tol),
        params,
    )


def parse_config(data) -> ExperimentConfig:
    """Validate a decoded JSON config (or a JSON string)."""
    if isinstance(data, (str, bytes)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError("config: expected a JSON object")
    _unknown(data, CONFIG_KEYS, "config")
    try:
        grid = GridSpec.from_json(data.get("grid", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"grid: {exc}") from None
    try:
        stats = Statistics(data.get("statistics", "fermi"))
    except ValueError:
        raise ConfigError(f"statistics: expected 'fermi' or 'bose', got {data.get('statistics')!r}") from None
    pn = data.get("particle_numbers", [1, 0])
    if not (isinstance(pn, list) and len(pn) == 2 and all(isinstance(n, int) and n >= 0 for n in pn)):
        raise ConfigError("particle_numbers: expected [N_up, N_down] with non-negative integers")
    cap = data.get("boson_cap", 1)
    if not isinstance(cap, int) or cap < 1:
        raise ConfigError("boson_cap: expected a positive integer")
    ph = data.get("phase", {})
    if not isinstance(ph, dict):
        raise ConfigError("phase: expected an object")
    _unknown(ph, PHASE_KEYS, "phase")
    phase = PhaseSpec(**ph)
    if phase.kind not in ("hd", "zero"):
        raise ConfigError(f"phase.kind: expected 'hd' or 'zero', got {phase.kind!r}")
    checks = data.get("checks", [])
    if not isinstance(checks, list) or not checks:
        raise ConfigError("checks: expected a nonempty list")
    out = data.get("output", {})
    if not isinstance(out, dict):
        raise ConfigError("output: expected an object")
    _unknown(out, OUTPUT_KEYS, "output")
    seed = data.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed: expected an integer")
    workers = data.get("workers")
    if workers is not None and (not isinstance(workers, int) or workers < 1):
        raise ConfigError("workers: expected a positive integer")
    return ExperimentConfig(
        grid, stats, tuple(pn), cap, phase, tuple(parse_check(c, i) for i, c in enumerate(checks)), dict(out), seed, workers
    )


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def worker_count(config: Optional[ExperimentConfig] = None) -> int:
    env = os.environ.get("FOCKFORGE_WORKERS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"FOCKFORGE_WORKERS: expected an integer, got {env!r}") from None
        return max(1, n)
    if config is not None and config.workers:
        return config.workers
    return min(4, os.cpu_count() or 1)


def phase_for(config: ExperimentConfig, grid: Optional[GridSpec] = None) -> PhaseFunctional:
    grid = grid or config.grid
    if config.phase.kind == "zero":
        return PhaseFunctional.zero()
    params = FermiParams(config.phase.k_f, config.phase.mass, config.phase.N, grid)
    return build_phase_hd(params, config.statistics.value)


# ---------------------------------------------------------------------------
# results


@dataclass
class Record:
    """One row of a residual table."""

    label: str  # q or k, "" when not applicable
    order: Optional[int]
    residual: float
    flag: str = ""
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"q_or_k": self.label, "order": self.order, "residual": _num(self.residual), "flag": self.flag}
        out.update(self.extra)
        return out


@dataclass
class SuiteResult:
    check: str
    kind: str  # "exact" or "measured"
    passed: bool
    records: List[Record] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)
    params: Dict[str, Any] = field(default_factory=dict)
    wall_time: float = 0.0

    def to_json(self) -> dict:
        return {
            "check": self.check,
            "kind": self.kind,
            "passed": self.passed,
            "params": self.params,
            "records": [r.to_json() for r in self.records],
            "warnings": list(self.warnings),
            "details": self.details,
        }


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _label(v) -> str:
    return ",".join(str(c) for c in v) if isinstance(v, (tuple, list)) else str(v)


def _pmap(fn: Callable, jobs: Sequence, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


# ---------------------------------------------------------------------------
# suites


def suite_car(config: ExperimentConfig, check: CheckSpec, workers: int) -> SuiteResult:
    """{c_i, c_j†} = delta_ij and {c_i, c_j} = 0 on every wrap grid up to ``max_modes`` modes."""
    max_modes = int(check.params.get("max_modes", 8))
    tol = check.tolerance if check.tolerance is not None else 1e-12
    grids = []
    for dim in (1, 2, 3):
        n = 0
        while 2 * (2 * n + 1) ** dim <= max_modes:
            grids.append(GridSpec(dim=dim, n_max=n, boundary_mode="wrap"))
            n += 1

    def job(grid):
        return grid, car_violations(build_fock_space(grid, "fermi"))

    res = SuiteResult("car_suite", "exact", True, params={"max_modes": max_modes, "tolerance": tol})
    for grid, v in _pmap(job, grids, workers):
        worst = max(v.values())
        ok = worst <= tol
        res.passed &= ok
        res.records.append(Record(f"dim={grid.dim};n_max={grid.n_max}", None, worst, "" if ok else "violation", {"modes": grid.n_modes}))
    return res


def _gauss_rational(rng: np.random.Generator, lo=-3, hi=3, den=4):
    re = sympy.Rational(int(rng.integers(lo * den, hi * den + 1)), den)
    im = sympy.Rational(int(rng.integers(lo * den, hi * den + 1)), den)
    return re + sympy.I * im


def worked_example_instance(rng: np.random.Generator, n_modes: int = 3):
    vecs = [[_gauss_rational(rng) for _ in range(n_modes)] for _ in range(4)]
    return tuple(vecs)


def worked_example_compare(f, g, f1, f2) -> Dict[str, bool]:
    """Three exact routes to ``c*(f) c(g) f1⊗f2`` on three up-spin modes.

    * the displayed closed form,
    * literal tensors with P-, b and b*,
    * integer occupation-number matrices from the Fock core acting on the
      encoded antisymmetric state.
    """
    closed = tensor.worked_example(f, g, f1, f2)
    state = tensor.product(f1, f2)
    literal = tensor.c_star(f, tensor.c(g, state))
    same_tensor = not tensor.add(closed, literal, coeffs=[1, -1])

    grid = GridSpec(dim=1, n_max=1, boundary_mode="wrap")
    two = build_basis(grid, "fermi", (2, 0))
    one = build_basis(grid, "fermi", (1, 0))
    n = len(f)
    cop = sympy.zeros(one.dim, two.dim)
    cdag = sympy.zeros(two.dim, one.dim)
    for m in range(n):
        a = build_annihilation(two, m, one).toarray()
        ad = build_creation(one, m, two).toarray()
        cop += sympy.conjugate(g[m]) * sympy.Matrix(np.rint(a.real).astype(int))
        cdag += f[m] * sympy.Matrix(np.rint(ad.real).astype(int))

    def encode(t, basis):
        v = sympy.zeros(basis.dim, 1)
        for key, amp in tensor.encode_antisymmetric(t).items():
            occ = [0] * basis.n_modes
            for i in key:
                occ[i] = 1
            v[basis.index[tuple(occ)]] = amp
        return v

    fock = cdag * (cop * encode(tensor.p_minus(state), two))
    diff = (fock - encode(closed, two)).applyfunc(sympy.expand)
    return {"closed_vs_tensor": same_tensor, "closed_vs_fock": all(x == 0 for x in diff)}


def suite_worked_example(config: ExperimentConfig, check: CheckSpec, workers: int) -> SuiteResult:
    instances = int(check.params.get("instances", 3))
    rng = np.random.default_rng(config.seed)
    inst = [worked_example_instance(rng) for _ in range(instances)]
    res = SuiteResult("worked_example", "exact", True, params={"instances": instances, "seed": config.seed})
    for i, out in enumerate(_pmap(lambda x: worked_example_compare(*x), inst, workers)):
        ok = all(out.values())
        res.passed &= ok
        res.records.append(Record(f"instance={i}", None, 0.0 if ok else 1.0, "" if ok else "mismatch", out))
    return res


def _exact_zero(op) -> float:
    m = op.matrix.copy()
    m.eliminate_zeros()
    return float(abs(m.data).max()) if m.nnz else 0.0


def current_equivalence(grid: GridSpec, sector: Tuple[int, int]) -> float:
    """Largest gap between ``j(k, s)`` and the first-quantized current on basis states."""
    basis = build_basis(grid, "fermi", sector)
    modes = enumerate_modes(grid)

    def index_of(spin, n):
        if not grid.contains(n):
            return None
        return mode_index(grid, Mode(spin, tuple(n)))

    worst = 0.0
    for spin in SPINS:
        for k in grid.transfers():
            for c in range(grid.dim):
                j = build_current(basis, k, spin, c).toarray()
                for col, st in enumerate(basis.states):
                    occ = [i for i, o in enumerate(st) if o]
                    ref = first_quantized_current(
                        occ, k, lambda a: modes[a].spin, lambda a: modes[a].n, index_of, grid.unit, c, spin
                    )
                    expect = np.zeros(basis.dim, dtype=complex)
                    for key, v in ref.items():
                        occ2 = [0] * basis.n_modes
                        for i in key:
                            occ2[i] = 1
                        expect[basis.index[tuple(occ2)]] = v
                    worst = max(worst, float(np.abs(j[:, col] - expect).max()))
    return worst


def suite_bilinear_algebra(config: ExperimentConfig, check: CheckSpec, workers: int) -> SuiteResult:
    tol = check.tolerance if check.tolerance is not None else 1e-10
    res = SuiteResult("bilinear_algebra", "exact", True, params={"current_tolerance": tol})
    grid = GridSpec(dim=1, n_max=1, boundary_mode="wrap")  # 6 modes
    space = build_fock_space(grid, "fermi")
    labels = [(k, s) for s in SPINS for k in grid.points]
    rho = {ks: build_density(space, *ks) for ks in labels}

    def comm_job(a):
        return max(_exact_zero(commutator(rho[a], rho[b])) for b in labels)

    worst_comm = max(_pmap(comm_job, labels, workers))
    worst_adj = 0.0
    for k, s in labels:
        nk = tuple(-c for c in k)
        worst_adj = max(worst_adj, _exact_zero(rho[(k, s)].H - rho[(nk, s)]))
        worst_adj = max(worst_adj, _exact_zero(build_current(space, k, s).H - build_current(space, nk, s)))
    res.records.append(Record("density_commutators", None, worst_comm, "" if worst_comm == 0 else "nonzero"))
    res.records.append(Record("adjoints", None, worst_adj, "" if worst_adj == 0 else "nonzero"))
    res.passed = worst_comm == 0 and worst_adj == 0

    cases = [
        (GridSpec(dim=1, n_max=2), (1, 0)),
        (GridSpec(dim=1, n_max=2), (2, 0)),
        (GridSpec(dim=1, n_max=2), (1, 1)),
        (GridSpec(dim=2, n_max=1), (2, 0)),
    ]
    for (grid, sector), gap in zip(cases, _pmap(lambda c: current_equivalence(*c), cases, workers)):
        ok = gap <= tol
        res.passed &= ok
        res.records.append(
            Record(f"current;dim={grid.dim};n_max={grid.n_max};N={sector[0]},{sector[1]}", None, gap, "" if ok else "mismatch")
        )
    return res


def suite_lemma(config: ExperimentConfig, check: CheckSpec, workers: int) -> SuiteResult:
    instances = int(check.params.get("instances", 100))
    tol = check.tolerance if check.tolerance is not None else 1e-9
    rng = np.random.default_rng(config.seed)
    inst = [random_lemma_instance(rng) for _ in range(instances)]
    reports = _pmap(lambda x: lemma_check(*x), inst, workers)
    res = SuiteResult("lemma", "measured", True, params={"instances": instances, "seed": config.seed, "tolerance": tol})
    worst = 0.0
    for i, rep in enumerate(reports):
        worst = max(worst, rep.max_abs_error)
        flag = "divergent" if rep.divergence_flag else ""
        res.records.append(Record(f"instance={i}", rep.order, rep.max_abs_error, flag))
    res.details["max_abs_error"] = worst
    res.passed = worst <= tol
    return res


def suite_phase_hd(config: ExperimentConfig, check: CheckSpec, workers: int) -> SuiteResult:
    n_max = int(check.params.get("n_max", 8))
    dim = int(check.params.get("dim", 1))
    k_f = float(check.params.get("k_f", config.phase.k_f))
    tol = check.tolerance if check.tolerance is not None else 1e-12
    grid = GridSpec(dim=dim, n_max=n_max)
    params = FermiParams(k_f, config.phase.mass, config.phase.N, grid)
    phi = build_phase_hd(params, "fermi")
    oracle = phase_tables_exact(n_max, dim, Fraction(k_f / grid.unit), params.particle_count)
    res = SuiteResult(
        "phase_hd", "measured", True, params={"n_max": n_max, "dim": dim, "k_f": k_f, "tolerance": tol, "sea": len(params.sea())}
    )
    worst = 0.0
    status_ok = True
    for row in phi.table:
        ref = oracle[row.q]
        gaps = [abs(row.w2 - float(ref["w2"]))]
        if ref["w1"] is not None:
            gaps.append(abs(row.w1 - float(ref["w1"])))
        if ref["U0"] is not None:
            gaps.append(abs((row.U0 if row.U0 is not None else math.inf) - ref["U0"]))
        expected_status = (
            "excluded" if not any(row.q) else
            "w2_zero" if ref["w2"] == 0 else
            "negative_radicand" if ref["radicand"] < 0 else "ok"
        )
        status_ok &= row.status == expected_status
        gap = max(gaps)
        worst = max(worst, gap)
        res.records.append(Record(_label(row.q), None, gap, row.status, {"w1": _num(row.w1), "w2": row.w2, "U0": _num(row.U0)}))
    lam0 = lambda_at_zero(n_max, dim, Fraction(k_f / grid.unit))
    w2_zero = [r.w2 for r in phi.table if not any(r.q)][0]
    res.details = {
        "max_table_error": worst,
        "lambda_at_zero_all_zero": not any(lam0),
        "w2_at_zero": w2_zero,
        "undefined_q": [_label(r.q) for r in phi.table if r.status in ("negative_radicand", "w2_zero")],
        "status_matches_oracle": status_ok,
    }
    res.passed = worst <= tol and not any(lam0) and w2_zero == 0 and status_ok
    return res


def suite_recursion(config: ExperimentConfig, check: CheckSpec, workers: int) -> SuiteResult:
    pairs = int(check.params.get("pairs", 20))
    n_max = int(check.params.get("n_max", 8))
    tol = check.tolerance if check.tolerance is not None else 1e-12
    rng = np.random.default_rng(config.seed)
    grid = GridSpec(dim=1, n_max=n_max)
    phi = build_phase_hd(FermiParams(config.phase.k_f, config.phase.mass, None, grid), "fermi")
    res = SuiteResult("recursion", "measured", True, params={"pairs": pairs, "n_max": n_max, "tolerance": tol})
    worst = 0.0
    parities = []
    for i in range(pairs):
        config_particles = [((float(rng.uniform(0, grid.box_length)),), SPINS[int(rng.integers(0, 2))]) for _ in range(4)]
        x = (float(rng.uniform(0, grid.box_length)),)
        xp = (float(rng.uniform(0, grid.box_length)),)
        r = recursion_residual(phi, config_particles, x, xp, "up", "up", grid, "fermi")
        closed = recursion_closed_form(phi, x, xp, grid)
        gap = abs(r.raw - closed)
        worst = max(worst, gap)
        parities.append(r.parity_ok)
        res.records.append(Record(f"pair={i}", None, gap, "" if r.parity_ok else "parity", {"m": r.m, "residual_re": r.residual.real, "residual_im": r.residual.imag}))
    bose = recursion_residual(PhaseFunctional.zero(), [((0.3,), Spin.UP)], (0.1,), (0.7,), "up", "up", grid, "bose")
    res.details = {
        "max_closed_form_gap": worst,
        "fermi_parity_ok_fraction": sum(parities) / len(parities) if parities else None,
        "bose_residual": abs(bose.residual),
        "bose_m": bose.m,
    }
    if not all(parities):
        res.warnings.append("fermi high-density phase: inferred m has the wrong parity on some configurations")
    res.passed = worst <= tol and bose.residual == 0 and bose.m == 0
    return res


def _reference_sector(config: ExperimentConfig, check: CheckSpec):
    n_max = int(check.params.get("n_max", 1))
    pn = tuple(check.params.get("particle_numbers", (2, 0)))
    boundary = check.params.get("boundary_mode", "wrap")
    grid = GridSpec(dim=int(check.params.get("dim", 1)), n_max=n_max, boundary_mode=boundary)
    stats = check.params.get("statistics", config.statistics.value)
    basis = build_basis(grid, stats, pn, int(check.params.get("boson_cap", max(config.boson_cap, sum(pn)))))
    return grid, basis


def _phase_on(config: ExperimentConfig, grid: GridSpec, statistics: str) -> PhaseFunctional:
    if config.phase.kind == "zero":
        return PhaseFunctional.zero()
    return build_phase_hd(FermiParams(config.phase.k_f, config.phase.mass, config.phase.N, grid), statistics)


def suite_canonical(config: ExperimentConfig, check: CheckSpec, workers: int) -> SuiteResult:
    """Deviation of ``[X_q, rho_k]`` from ``i delta_{k,q}`` versus order, for both X constructions."""
    grid, basis = _reference_sector(config, check)
    spin = Spin.parse(check.params.get("spin", "up"))
    forms = check.params.get("forms", [CURRENT_FORM, PSI_FORM])
    phi = _phase_on(config, grid, basis.statistics.value)
    orders = list(check.order_list)
    res = SuiteResult(
        "canonical_commutator",
        "measured",
        True,
        params={"grid": grid.to_json(), "particle_numbers": list(basis.particle_numbers), "spin": spin.value, "forms": forms},
    )
    jobs = [(form, o) for form in forms for o in orders]
    results = _pmap(lambda fo: canonical_sweep(basis, spin, phi, [fo[1]], fo[0], spins=SPINS), jobs, workers)
    trend = {}
    for (form, o), recs in zip(jobs, results):
        per_q: Dict[tuple, float] = {}
        other_spin = 0.0
        for r in recs:
            if r.spin_prime == spin.value:
                per_q[r.q] = max(per_q.get(r.q, 0.0), r.deviation)
            else:
                other_spin = max(other_spin, r.deviation)
        for q, dev in sorted(per_q.items()):
            res.records.append(Record(_label(q), o, dev, "", {"form": form}))
        res.records.append(Record("other_spin", o, other_spin, "" if other_spin == 0 else "nonzero", {"form": form}))
        trend.setdefault(form, []).append(max(per_q.values(), default=0.0))
        if other_spin != 0:
            res.passed = False
    verdicts = {form: non_increasing(vals) for form, vals in trend.items()}
    res.details = {"max_deviation_by_order": {f: dict(zip(orders, v)) for f, v in trend.items()}, "non_increasing": verdicts}
    if len(forms) == 2 and basis.particle_numbers[spin.index] >= 1:
        q0 = conjugate_labels(grid)[0]
        res.details["x_form_distance"] = {o: x_form_distance(basis, q0, spin, phi, o) for o in orders}
        res.details["hermiticity_gap"] = {
            form: {o: hermiticity_gap(x_family(basis, spin, phi, o, form), q0) for o in orders} for form in forms
        }
    for form, ok in verdicts.items():
        if not ok:
            res.warnings.append(f"{form}-form X: commutator deviation grows with order")
    if check.tolerance is not None:
        worst_top = max(v[-1] for v in trend.values())
        res.passed &= worst_top <= check.tolerance
    return res


def suite_conjecture(config: ExperimentConfig, check: CheckSpec, workers: int) -> SuiteResult:
    """Residual ``||psi~ - psi||`` tables over a list of sectors and grids."""
    cases = check.params.get(
        "cases",
        [
            {"n_max": 0, "particle_numbers": [1, 0]},
            {"n_max": 1, "particle_numbers": [1, 0]},
            {"n_max": 1, "particle_numbers": [2, 0]},
            {"n_max": 2, "particle_numbers": [1, 0]},
            {"n_max": 2, "particle_numbers": [2, 0]},
        ],
    )
    spin = Spin.parse(check.params.get("spin", "up"))
    stats = check.params.get("statistics", config.statistics.value)
    boundary = check.params.get("boundary_mode", "wrap")
    orders = list(check.order_list)
    res = SuiteResult(
        "verify_conjecture",
        "measured",
        True,
        params={"cases": cases, "spin": spin.value, "statistics": stats, "boundary_mode": boundary, "tolerance": check.tolerance},
    )

    def job(case):
        grid = GridSpec(dim=int(case.get("dim", 1)), n_max=int(case["n_max"]), boundary_mode=boundary)
        pn = tuple(case["particle_numbers"])
        basis = build_basis(grid, stats, pn, int(case.get("boson_cap", max(1, sum(pn)))))
        phi = _phase_on(config, grid, stats)
        return grid, verify_conjecture(basis, check.k_list, spin, phi, orders, check.tolerance)

    summaries = []
    for grid, rep in _pmap(job, cases, workers):
        tag = f"n_max={grid.n_max};N={rep.sector[0]},{rep.sector[1]}"
        for r in rep.records:
            res.records.append(Record(f"{tag};k={_label(r.k)}", r.order, r.residual, ",".join(r.flags)))
        summaries.append({"case": tag, "monotone": rep.all_monotone, "passed": {_label(k): v for k, v in rep.passed.items()}})
        if not rep.all_monotone:
            res.warnings.append(f"{tag}: residual is not monotone in order")
        if any(v is False for v in rep.passed.values()):
            res.warnings.append(f"{tag}: residual above tolerance at the largest order")
    res.details = {"cases": summaries}
    return res


def suite_structure(config: ExperimentConfig, check: CheckSpec, workers: int) -> SuiteResult:
    """Exact bookkeeping: X_0 = 0, sector maps of X and psi~."""
    grid, basis = _reference_sector(config, check)
    spin = Spin.parse(check.params.get("spin", "up"))
    phi = _phase_on(config, grid, basis.statistics.value)
    n_home = basis.particle_numbers[spin.index]
    lowered = list(basis.particle_numbers)
    lowered[spin.index] -= 1
    res = SuiteResult("structure", "exact", True, params={"grid": grid.to_json(), "particle_numbers": list(basis.particle_numbers)})
    zero = (0,) * grid.dim
    for o in check.order_list:
        for form in (CURRENT_FORM, PSI_FORM):
            fam = x_family(basis, spin, phi, o, form)
            x0 = operator_norm(fam[zero].evaluated)
            res.records.append(Record("X_0", o, x0, "" if x0 == 0 else "nonzero", {"form": form}))
            res.passed &= x0 == 0
            # sectors reached from the home sector by every X_q
            reach = set()
            for q in fam.labels():
                op = fam[q].evaluated
                cols = op.domain.sector_indices(basis.particle_numbers)
                block = op.matrix[:, cols]
                rows = np.unique(block.nonzero()[0])
                reach |= {tuple(op.codomain.sector_labels[r]) for r in rows}
            allowed = {
                tuple(basis.particle_numbers[:spin.index]) + (n,) + tuple(basis.particle_numbers[spin.index + 1:])
                for n in range(max(0, n_home - (o if form == PSI_FORM else 0)), n_home + 1)
            }
            ok = reach <= allowed
            res.passed &= ok
            res.records.append(Record("X_sectors", o, 0.0 if ok else 1.0, "" if ok else "leak", {"form": form, "reached": sorted([int(a), int(b)] for a, b in reach)}))
        for k in grid.points:
            pt = build_psi_tilde(basis, k, spin, phi, o)
            psi = build_field(basis, k, spin)
            ok = pt.operator.codomain.sectors == (tuple(lowered),) and pt.operator.domain.sectors == basis.sectors
            ok &= psi.codomain.same_space(pt.operator.codomain)
            res.passed &= ok
            res.records.append(Record(f"psi_tilde;k={_label(k)}", o, 0.0 if ok else 1.0, "" if ok else "leak"))
    return res


SUITES: Dict[str, Callable[[ExperimentConfig, CheckSpec, int], SuiteResult]] = {
    "car_suite": suite_car,
    "worked_example": suite_worked_example,
    "bilinear_algebra": suite_bilinear_algebra,
    "lemma": suite_lemma,
    "phase_hd": suite_phase_hd,
    "recursion": suite_recursion,
    "canonical_commutator": suite_canonical,
    "verify_conjecture": suite_conjecture,
    "structure": suite_structure,
}


# ---------------------------------------------------------------------------
# running and reporting


@dataclass
class RunOutcome:
    report: dict
    exit_code: int
    results: List[SuiteResult]

    @property
    def warnings(self) -> List[str]:
        return [f"{r.check}: {w}" for r in self.results for w in r.warnings]


def run_check(config: ExperimentConfig, check: CheckSpec, workers: Optional[int] = None) -> SuiteResult:
    workers = worker_count(config) if workers is None else workers
    start = time.perf_counter()
    result = SUITES[check.name](config, check, workers)
    result.wall_time = time.perf_counter() - start
    return result


def run(config: ExperimentConfig, workers: Optional[int] = None) -> RunOutcome:
    """Execute every configured check in order and assemble the report."""
    workers = worker_count(config) if workers is None else workers
    started = time.time()
    results = [run_check(config, c, workers) for c in config.checks]
    hard_fail = any(not r.passed for r in results)
    report = {
        "schema_version": SCHEMA_VERSION,
        "code_version": __version__,
        "config": config.to_json(),
        "checks": [r.to_json() for r in results],
        "summary": {
            "passed": not hard_fail,
            "warnings": [f"{r.check}: {w}" for r in results for w in r.warnings],
        },
        "timing": {
            "started_unix": started,
            "workers": workers,
            "wall_time": {r.check: r.wall_time for r in results},
        },
    }
    return RunOutcome(report, EXIT_FAILED if hard_fail else EXIT_OK, results)


def deterministic_view(report: dict) -> dict:
    """The report without its timing section (the only run-dependent part)."""
    return {k: v for k, v in report.items() if k != "timing"}


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def report_json(report: dict, include_timing: bool = True) -> str:
    data = report if include_timing else deterministic_view(report)
    return json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n"


def report_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "q_or_k", "order", "residual", "flag"])
    for check in report["checks"]:
        for r in check["records"]:
            extra = r.get("form")
            name = check["check"] if extra is None else f"{check['check']}[{extra}]"
            order = "" if r["order"] is None else r["order"]
            w.writerow([name, r["q_or_k"], order, repr(r["residual"]) if isinstance(r["residual"], float) else r["residual"], r["flag"]])
    return buf.getvalue()


def write_outputs(outcome: RunOutcome, report_path=None, csv_path=None) -> None:
    if report_path:
        Path(report_path).write_text(report_json(outcome.report), encoding="utf-8")
    if csv_path:
        Path(csv_path).write_text(report_csv(outcome.report), encoding="utf-8")


def bundled_config_path(name: str) -> Path:
    path = Path(__file__).parent / "configs" / (name if name.endswith(".json") else name + ".json")
    if not path.exists():
        available = sorted(p.stem for p in (Path(__file__).parent / "configs").glob("*.json"))
        raise ConfigError(f"no bundled config {name!r}; available: {', '.join(available)}")
    return path
