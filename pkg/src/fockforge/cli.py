"""Command line entry point: ``fockforge <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import harness
from .bilinears import build_current, build_delta_rho, build_density, build_field
from .dpva import CURRENT_FORM, PSI_FORM, build_psi_tilde, x_family
from .export import export_manifest, export_operator
from .fock_core import build_basis
from .harness import CheckSpec, ConfigError, ExperimentConfig, PhaseSpec
from .lattice import GridSpec, enumerate_modes
from .phase import FermiParams, build_phase_hd


def _ints(text: str) -> List[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _grid_args(p: argparse.ArgumentParser, n_max: int = 1, boundary: str = "wrap"):
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--nmax", type=int, default=n_max)
    p.add_argument("--L", type=float, default=2 * np.pi, dest="box_length")
    p.add_argument("--boundary", choices=["wrap", "truncate"], default=boundary)


def _grid(a) -> GridSpec:
    return GridSpec(dim=a.dim, box_length=a.box_length, n_max=a.nmax, boundary_mode=a.boundary)


def _sector_args(p: argparse.ArgumentParser, nup: int = 2):
    p.add_argument("--nup", type=int, default=nup)
    p.add_argument("--ndown", type=int, default=0)
    p.add_argument("--stats", choices=["fermi", "bose"], default="fermi")
    p.add_argument("--boson-cap", type=int, default=None)


def _basis(a):
    cap = a.boson_cap if a.boson_cap is not None else max(1, a.nup + a.ndown)
    return build_basis(_grid(a), a.stats, (a.nup, a.ndown), cap)


def _print_result(result: harness.SuiteResult, as_json: bool) -> int:
    if as_json:
        print(json.dumps(result.to_json(), indent=2, sort_keys=True))
    else:
        state = "PASS" if result.passed else "FAIL"
        print(f"{result.check}: {state} ({result.kind}, {result.wall_time:.2f}s)")
        for r in result.records:
            order = "" if r.order is None else f" order={r.order}"
            form = f" [{r.extra['form']}]" if "form" in r.extra else ""
            flag = f" {r.flag}" if r.flag else ""
            print(f"  {r.label}{form}{order}: {r.residual:.3e}{flag}")
        for k, v in result.details.items():
            print(f"  {k}: {v}")
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return harness.EXIT_OK if result.passed else harness.EXIT_FAILED


def _adhoc(a, check: CheckSpec, **cfg) -> int:
    config = ExperimentConfig(checks=(check,), seed=getattr(a, "seed", 0), **cfg)
    return _print_result(harness.run_check(config, check), a.json)


def cmd_run(a) -> int:
    path = Path(a.config)
    if not path.exists() and not a.config.endswith(".json") or a.bundled:
        path = harness.bundled_config_path(a.config)
    config = harness.load_config(path)
    if a.seed is not None:
        config = ExperimentConfig(**{**config.__dict__, "seed": a.seed})
    outcome = harness.run(config, a.workers)
    out_dir = Path(a.out) if a.out else Path.cwd()
    out_dir.mkdir(parents=True, exist_ok=True)
    report = config.output.get("report", "report.json")
    table = config.output.get("csv", "report.csv")
    harness.write_outputs(outcome, out_dir / report, out_dir / table)
    for r in outcome.results:
        state = "PASS" if r.passed else "FAIL"
        print(f"{r.check}: {state} ({r.kind}, {len(r.records)} records, {r.wall_time:.2f}s)")
    for w in outcome.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"report: {out_dir / report}")
    print(f"table: {out_dir / table}")
    return outcome.exit_code


def cmd_basis(a) -> int:
    basis = _basis(a)
    print(f"dimension {basis.dim}")
    print("modes:", " ".join(f"{i}:{m}" for i, m in enumerate(enumerate_modes(basis.grid))))
    if a.states:
        for i, s in enumerate(basis.states):
            print(f"  {i}: {''.join(map(str, s))}")
    return 0


def cmd_lemma(a) -> int:
    check = CheckSpec("lemma", params={"instances": a.instances}, tolerance=a.tol)
    config = ExperimentConfig(checks=(check,), seed=a.seed)
    result = harness.run_check(config, check)
    if a.json:
        return _print_result(result, True)
    state = "PASS" if result.passed else "FAIL"
    print(
        f"lemma: {state} instances={a.instances} seed={a.seed} "
        f"max_error={result.details['max_abs_error']:.3e} time={result.wall_time:.2f}s"
    )
    return harness.EXIT_OK if result.passed else harness.EXIT_FAILED


def cmd_algebra(a) -> int:
    code = _adhoc(a, CheckSpec("car_suite", params={"max_modes": a.max_modes}))
    return max(code, _adhoc(a, CheckSpec("bilinear_algebra")))


def _phase_spec(a) -> PhaseSpec:
    return PhaseSpec(kind=a.phase, k_f=a.kf, mass=a.mass)


def cmd_canonical(a) -> int:
    params = {
        "n_max": a.nmax, "dim": a.dim, "boundary_mode": a.boundary, "particle_numbers": [a.nup, a.ndown],
        "statistics": a.stats, "forms": a.forms,
    }
    check = CheckSpec("canonical_commutator", order_list=tuple(_ints(a.orders)), params=params)
    return _adhoc(a, check, phase=_phase_spec(a))


def cmd_conjecture(a) -> int:
    cases = [{"n_max": a.nmax, "dim": a.dim, "particle_numbers": [a.nup, a.ndown]}]
    params = {"cases": cases, "statistics": a.stats, "boundary_mode": a.boundary}
    k_list = None if a.k is None else tuple((k,) for k in _ints(a.k))
    check = CheckSpec("verify_conjecture", k_list=k_list, order_list=tuple(_ints(a.orders)), tolerance=a.tol, params=params)
    return _adhoc(a, check, phase=_phase_spec(a))


def cmd_phase(a) -> int:
    grid = GridSpec(dim=a.dim, box_length=a.box_length, n_max=a.nmax, boundary_mode="truncate")
    params = FermiParams(a.kf, a.mass, a.N, grid)
    phi = build_phase_hd(params, "fermi")
    if a.json:
        print(json.dumps({"params": params.to_json(), "table": [r.to_json() for r in phi.table]}, indent=2))
        return 0
    print(f"k_f={a.kf} mass={a.mass} N={params.particle_count} sea={len(params.sea())} points")
    print(f"{'q':>10} {'w1':>14} {'w2':>14} {'theta':>5} {'U0':>14}  status")
    for r in phi.table:
        u0 = "undefined" if r.U0 is None else f"{r.U0:.10g}"
        w1 = "-" if not any(r.q) else f"{r.w1:.10g}"
        print(f"{','.join(map(str, r.q)):>10} {w1:>14} {r.w2:>14.10g} {r.theta:>5} {u0:>14}  {r.status}")
    return 0


def cmd_export(a) -> int:
    basis = _basis(a)
    out = Path(a.out)
    k = tuple(_ints(a.k)) if a.k else (0,) * basis.grid.dim
    if a.what == "basis":
        export_manifest(basis, out)
    else:
        if a.what == "density":
            op = build_density(basis, k, a.spin)
        elif a.what == "delta-rho":
            op = build_delta_rho(basis, k, a.spin)
        elif a.what == "current":
            op = build_current(basis, k, a.spin, a.component)
        elif a.what == "field":
            op = build_field(basis, k, a.spin)
        else:
            cfg = ExperimentConfig(grid=basis.grid, statistics=basis.statistics, phase=_phase_spec(a))
            phi = harness.phase_for(cfg)
            if a.what == "x":
                op = x_family(basis, a.spin, phi, a.order, a.form)[k].evaluated
            else:
                op = build_psi_tilde(basis, k, a.spin, phi, a.order).operator
        export_operator(op, out, f"{a.what}(k={list(k)},s={a.spin})")
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fockforge", description="Finite Fock-space operator checks.")
    sub = p.add_subparsers(dest="command", metavar="command")

    r = sub.add_parser("run", help="run a JSON experiment config")
    r.add_argument("config", help="path to a config, or the name of a bundled config (full, car, conjecture, bose)")
    r.add_argument("--out", default=None, help="directory for the report and CSV table")
    r.add_argument("--workers", type=int, default=None)
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--bundled", action="store_true", help="always resolve the name among bundled configs")
    r.set_defaults(fn=cmd_run)

    b = sub.add_parser("basis", help="print a sector's dimension and mode order")
    _grid_args(b)
    _sector_args(b, nup=1)
    b.add_argument("--states", action="store_true")
    b.set_defaults(fn=cmd_basis)

    lm = sub.add_parser("verify-lemma", help="random lemma instances against the sampled-grid oracle")
    lm.add_argument("--seed", type=int, default=0)
    lm.add_argument("--instances", type=int, default=100)
    lm.add_argument("--tol", type=float, default=1e-9)
    lm.add_argument("--json", action="store_true")
    lm.set_defaults(fn=cmd_lemma)

    al = sub.add_parser("verify-algebra", help="anticommutators, density commutators, adjoints, current")
    al.add_argument("--max-modes", type=int, default=8)
    al.add_argument("--json", action="store_true")
    al.set_defaults(fn=cmd_algebra)

    for name, fn, help_ in (
        ("verify-canonical", cmd_canonical, "[X_q, rho_k] deviation versus truncation order"),
        ("verify-conjecture", cmd_conjecture, "residual of the reconstructed field versus order"),
    ):
        c = sub.add_parser(name, help=help_)
        _grid_args(c)
        _sector_args(c, nup=2 if name == "verify-canonical" else 1)
        c.add_argument("--orders", default="1,2,3,4")
        c.add_argument("--phase", choices=["hd", "zero"], default="hd")
        c.add_argument("--kf", type=float, default=1.0)
        c.add_argument("--mass", type=float, default=1.0)
        c.add_argument("--json", action="store_true")
        if name == "verify-canonical":
            c.add_argument("--forms", nargs="+", choices=[CURRENT_FORM, PSI_FORM], default=[CURRENT_FORM, PSI_FORM])
        else:
            c.add_argument("--k", default=None, help="comma-separated 1D momenta (default: every grid point)")
            c.add_argument("--tol", type=float, default=None)
        c.set_defaults(fn=fn)

    ph = sub.add_parser("phase-hd", help="tabulate w1, w2 and U0 of the high-density phase")
    ph.add_argument("--kf", type=float, required=True)
    ph.add_argument("--nmax", type=int, default=8)
    ph.add_argument("--dim", type=int, default=1)
    ph.add_argument("--L", type=float, default=2 * np.pi, dest="box_length")
    ph.add_argument("--mass", type=float, default=1.0)
    ph.add_argument("--N", type=int, default=None)
    ph.add_argument("--json", action="store_true")
    ph.set_defaults(fn=cmd_phase)

    ex = sub.add_parser("export", help="dump an operator as JSON-lines triplets, or a basis manifest")
    ex.add_argument("what", choices=["basis", "density", "delta-rho", "current", "field", "x", "psi-tilde"])
    ex.add_argument("--out", required=True)
    _grid_args(ex)
    _sector_args(ex)
    ex.add_argument("--k", default=None, help="comma-separated momentum components")
    ex.add_argument("--spin", default="up")
    ex.add_argument("--component", type=int, default=0)
    ex.add_argument("--order", type=int, default=2)
    ex.add_argument("--form", choices=[CURRENT_FORM, PSI_FORM], default=CURRENT_FORM)
    ex.add_argument("--phase", choices=["hd", "zero"], default="hd")
    ex.add_argument("--kf", type=float, default=1.0)
    ex.add_argument("--mass", type=float, default=1.0)
    ex.set_defaults(fn=cmd_export)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "fn", None):
        parser.print_usage(sys.stderr)
        return harness.EXIT_CONFIG
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return harness.EXIT_CONFIG
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return harness.EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
