"""Command-line benchmark and verification harness.

``sfdetau solve`` runs the manufactured-solution problems over a grid of
cells and writes one CSV row per (cell, preconditioner) plus a JSON report.
``sfdetau verify`` runs the property and spectral checks and exits nonzero
naming the first failed check.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .analysis import (
    commutator_bound_check,
    convergence_constants,
    preconditioned_spectrum_check,
    tau_spectrum_check,
    convergence_rate_check,
)
from .coefficients import CoefficientSequence, Scheme, make_coeffs, validate_properties
from .krylov import SolverConfig
from .operator import SfdeOperator, AxisTerm, materialize_dense
from .preconditioners import MEANS, build_tau, tau_dense
from .problems import PRECONDITIONERS, example1, example2, time_step_solve

__all__ = ["RunConfig", "CSV_COLUMNS", "run_benchmark", "run_verification", "main"]

CSV_COLUMNS = [
    "problem",
    "scheme",
    "preconditioner",
    "orders",
    "N",
    "M_plus_1",
    "iter_mean",
    "cpu_seconds",
    "E_MN",
    "converged",
]
PROBLEMS = {"example1": 2, "example2": 3}
EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    problem: str = "example1"
    orders: list[float] = field(default_factory=lambda: [1.5, 1.9])
    grid_exp: list[int] = field(default_factory=lambda: [6])
    time_exp: list[int] = field(default_factory=lambda: [4])
    scheme: str = "centered"
    preconditioners: list[str] = field(default_factory=lambda: ["tau"])
    tol: float = 1e-7
    restart: int | None = None
    stop_ref: str = "rhs"
    mean: str | None = None
    seed: int = 0
    jobs: int = 1
    out: str | None = None

    def validate(self) -> "RunConfig":
        if self.problem not in PROBLEMS:
            raise UsageError(f"unknown problem {self.problem!r}; choose from {sorted(PROBLEMS)}")
        if len(self.orders) != PROBLEMS[self.problem]:
            raise UsageError(f"{self.problem} needs {PROBLEMS[self.problem]} orders, got {len(self.orders)}")
        if any(not 1 < a < 2 for a in self.orders):
            raise UsageError(f"orders must lie in (1, 2), got {self.orders}")
        if not self.grid_exp or any(p < 2 for p in self.grid_exp):
            raise UsageError("grid exponents must be integers >= 2")
        if not self.time_exp or any(q < 0 for q in self.time_exp):
            raise UsageError("time exponents must be non-negative integers")
        try:
            Scheme(self.scheme)
        except ValueError:
            raise UsageError(f"unknown scheme {self.scheme!r}; choose from {[s.value for s in Scheme]}") from None
        bad = [p for p in self.preconditioners if p not in PRECONDITIONERS]
        if bad or not self.preconditioners:
            raise UsageError(f"preconditioners must be a non-empty subset of {PRECONDITIONERS}")
        if self.mean is not None and self.mean not in MEANS:
            raise UsageError(f"mean must be one of {MEANS}")
        if self.jobs < 1:
            raise UsageError("jobs must be positive")
        try:
            self.solver_config()
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        return self

    def solver_config(self) -> SolverConfig:
        return SolverConfig(tol_rel=self.tol, restart=self.restart, reference=self.stop_ref)


def _make_problem(cfg: RunConfig, p: int, q: int):
    M = 2**p - 1
    N = 2**q
    if cfg.problem == "example1":
        return example1(*cfg.orders, M, N)
    return example2(*cfg.orders, M, N)


def _run_cell(cfg: RunConfig, p: int, q: int, kind: str) -> dict[str, Any]:
    spec = _make_problem(cfg, p, q)
    rep = time_step_solve(
        spec, cfg.scheme, kind, cfg.solver_config(), keep_history=False, mean=cfg.mean
    )
    return {
        "problem": cfg.problem,
        "scheme": Scheme(cfg.scheme).value,
        "preconditioner": kind,
        "orders": list(cfg.orders),
        "N": spec.N,
        "M_plus_1": 2**p,
        "iter_mean": round(rep.iter_mean, 1),
        "iterations": list(rep.iterations),
        "E_MN": rep.E_MN,
        "converged": rep.all_converged,
        "timing": {
            "build_seconds": rep.wall_times["build"],
            "solve_seconds": rep.wall_times["solve"],
            "per_step_seconds": rep.wall_times["per_step"],
        },
    }


def run_benchmark(cfg: RunConfig) -> tuple[dict[str, Any], str]:
    """Run every (grid, time, preconditioner) cell; return the JSON report and CSV text."""
    cfg.validate()
    cells = [(p, q, k) for q in cfg.time_exp for p in cfg.grid_exp for k in cfg.preconditioners]
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(lambda c: _run_cell(cfg, *c), cells))
    else:
        rows = [_run_cell(cfg, *c) for c in cells]
    report = {
        "kind": "benchmark",
        "version": __version__,
        "config": dataclasses.asdict(cfg),
        "rows": rows,
        "all_converged": all(r["converged"] for r in rows),
    }
    return report, rows_to_csv(rows)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        cpu = r["timing"]["build_seconds"] + r["timing"]["solve_seconds"]
        w.writerow([
            r["problem"],
            r["scheme"],
            r["preconditioner"],
            "(" + ",".join(f"{a:g}" for a in r["orders"]) + ")",
            r["N"],
            r["M_plus_1"],
            f"{r['iter_mean']:.1f}",
            f"{cpu:.3f}",
            "" if r["E_MN"] is None else f"{r['E_MN']:.3e}",
            str(r["converged"]).lower(),
        ])
    return buf.getvalue()


def dump_report(report: dict[str, Any]) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def strip_timing(report: Any) -> Any:
    """Copy of a report without any ``timing`` entries (for determinism checks)."""
    if isinstance(report, dict):
        return {k: strip_timing(v) for k, v in report.items() if k != "timing"}
    if isinstance(report, list):
        return [strip_timing(v) for v in report]
    return report


# ---------------------------------------------------------------------------
# verification

VERIFY_ORDERS = (1.1, 1.3, 1.5, 1.7, 1.9)
FAULTS = ("coefficients", "preconditioner")


def _corrupt(seq: CoefficientSequence) -> CoefficientSequence:
    v = seq.values.copy()
    v[3] = abs(v[3])
    return CoefficientSequence(seq.scheme, seq.gamma, v)


def run_verification(
    orders=VERIFY_ORDERS, seed: int = 0, prefix: int = 4096, fault: str | None = None
) -> dict[str, Any]:
    """Run the property suite; each check records ``passed`` and a short detail."""
    if fault is not None and fault not in FAULTS:
        raise UsageError(f"unknown fault {fault!r}")
    rng = np.random.default_rng(seed)
    checks: list[dict[str, Any]] = []

    def record(name, passed, **detail):
        checks.append({"name": name, "passed": bool(passed), **detail})

    for scheme in Scheme:
        for g in orders:
            seq = make_coeffs(scheme, g, prefix)
            if fault == "coefficients":
                seq = _corrupt(seq)
            rep = validate_properties(seq)
            failed = [c.name for c in rep.checks if not c.passed]
            record(
                f"coefficient_properties[{scheme.value},{g:g}]",
                rep.passed,
                failed_properties=failed,
            )
            for M in (8, 64, 512):
                sp = tau_spectrum_check(scheme, g, M)
                record(
                    f"tau_spectrum[{scheme.value},{g:g},M={M}]",
                    sp.passed,
                    min_eig=sp.min_eig,
                    max_eig=sp.max_eig,
                )

    scaled = []
    for M in (32, 64, 128, 256):
        z = 2.0 + np.arange(1, M + 1) / (M + 1)
        cr = commutator_bound_check(z, Scheme.CENTERED_DIFFERENCE, 1.5, prefix)
        scaled.append(cr.scaled_norm)
        record(f"commutator_bound[M={M}]", cr.passed, norm=cr.norm, bound=cr.bound)
    trend = all(b <= 1.1 * a for a, b in zip(scaled, scaled[1:]))
    record("commutator_decay_trend", trend, scaled_norms=scaled)

    worst_exact = 0.0
    worst_oracle = 0.0
    for trial in range(25):
        op = _random_operator(rng, trial)
        P = tau_dense(op)
        prec = build_tau(op)
        if fault == "preconditioner":
            prec.lam = prec.lam * 1.01
        v = rng.standard_normal(op.size)
        err = np.max(np.abs(P @ prec.solve(v) - v)) / np.max(np.abs(v))
        worst_exact = max(worst_exact, float(err))
        A = materialize_dense(op)
        rel = np.linalg.norm(op.matvec(v) - A @ v) / np.linalg.norm(A @ v)
        worst_oracle = max(worst_oracle, float(rel))
    record("preconditioner_exactness", worst_exact <= 1e-10, worst=worst_exact)
    record("matrix_free_oracle", worst_oracle <= 1e-10, worst=worst_oracle)

    spec = example1(1.5, 1.9, 15, 256)
    consts = convergence_constants(spec)
    record("constants_ranges", 0 < consts.c1 < 1 and consts.c2 > 2**0.5 and 0 < consts.theta < 1
           and consts.c_star > 0, theta=consts.theta, c_star=consts.c_star)
    ps = preconditioned_spectrum_check(spec, constants=consts)
    record("preconditioned_spectrum", ps.passed and ps.hypothesis_met, h_min=ps.h_min, h_max=ps.h_max,
           skew_radius=ps.skew_radius)
    rate = convergence_rate_check(spec, n_steps=2, constants=consts)
    record("convergence_rate", rate.passed, worst_ratio=rate.worst_ratio)

    failed = [c["name"] for c in checks if not c["passed"]]
    return {
        "kind": "verification",
        "version": __version__,
        "config": {"orders": list(orders), "seed": seed, "prefix": prefix},
        "checks": checks,
        "failed": failed,
        "passed": not failed,
    }


def _random_operator(rng: np.random.Generator, trial: int) -> SfdeOperator:
    m = 1 + trial % 3
    limits = {1: 60, 2: 20, 3: 9}
    dims = tuple(int(rng.integers(2, limits[m] + 1)) for _ in range(m))
    J = int(np.prod(dims))
    scheme = list(Scheme)[trial % 3]
    terms = []
    for i in range(m):
        g = float(rng.uniform(1.05, 1.95))
        seq = make_coeffs(scheme, g, dims[i])
        coef = rng.uniform(0.5, 3.0, size=J)
        terms.append(AxisTerm(float(rng.uniform(0.01, 5.0)), seq.values, coef, order=g))
    return SfdeOperator(dims, terms)


# ---------------------------------------------------------------------------
# argument handling


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace("(", "").replace(")", "").split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _names(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sfdetau", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="run benchmark cells and write CSV/JSON reports")
    s.add_argument("--config", type=Path, help="flat JSON file with RunConfig fields; flags override it")
    s.add_argument("--problem", choices=sorted(PROBLEMS))
    s.add_argument("--orders", type=_floats, help="fractional orders, e.g. 1.5,1.9")
    s.add_argument("--grid-exp", type=_ints, help="p values with M+1 = 2**p (comma-separated)")
    s.add_argument("--time-exp", type=_ints, help="q values with N = 2**q (comma-separated)")
    s.add_argument("--scheme", choices=[x.value for x in Scheme])
    s.add_argument("--precond", type=_names, help=f"subset of {','.join(PRECONDITIONERS)}")
    s.add_argument("--tol", type=float)
    s.add_argument("--restart", type=int)
    s.add_argument("--stop-ref", choices=("rhs", "initial"), help="stopping reference norm")
    s.add_argument("--mean", choices=MEANS, help="override the problem's coefficient mean")
    s.add_argument("--seed", type=int)
    s.add_argument("--jobs", type=int, help="worker threads for independent cells")
    s.add_argument("--out", help="output prefix; writes PREFIX.csv and PREFIX.json")

    v = sub.add_parser("verify", help="run the property and spectral checks")
    v.add_argument("--orders", type=_floats, help="orders for the coefficient checks")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", help="write the JSON report here")
    v.add_argument("--inject-fault", choices=FAULTS, help=argparse.SUPPRESS)
    return parser


_FLAG_FIELDS = {
    "problem": "problem",
    "orders": "orders",
    "grid_exp": "grid_exp",
    "time_exp": "time_exp",
    "scheme": "scheme",
    "precond": "preconditioners",
    "tol": "tol",
    "restart": "restart",
    "stop_ref": "stop_ref",
    "mean": "mean",
    "seed": "seed",
    "jobs": "jobs",
    "out": "out",
}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values: dict[str, Any] = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        known = {f.name for f in dataclasses.fields(RunConfig)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise UsageError(f"unknown config fields: {unknown}")
        values.update(data)
    for flag, name in _FLAG_FIELDS.items():
        val = getattr(args, flag, None)
        if val is not None:
            values[name] = val
    for name in ("orders", "grid_exp", "time_exp", "preconditioners"):
        if name in values and not isinstance(values[name], list):
            values[name] = [values[name]]
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise UsageError(str(exc)) from None
    return cfg.validate()


def _table(rows) -> str:
    head = f"{'orders':<18}{'N':>6}{'M+1':>7}{'precond':>11}{'iter':>7}{'E_MN':>12}{'cpu(s)':>9}"
    lines = [head]
    for r in rows:
        orders = "(" + ",".join(f"{a:g}" for a in r["orders"]) + ")"
        err = "-" if r["E_MN"] is None else f"{r['E_MN']:.3e}"
        cpu = r["timing"]["build_seconds"] + r["timing"]["solve_seconds"]
        flag = "" if r["converged"] else "  (not converged)"
        lines.append(
            f"{orders:<18}{r['N']:>6}{r['M_plus_1']:>7}{r['preconditioner']:>11}{r['iter_mean']:>7.1f}"
            f"{err:>12}{cpu:>9.2f}{flag}"
        )
    return "\n".join(lines)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            cfg = config_from_args(args)
            report, csv_text = run_benchmark(cfg)
            print(_table(report["rows"]))
            if cfg.out:
                Path(cfg.out + ".csv").write_text(csv_text, encoding="utf-8")
                Path(cfg.out + ".json").write_text(dump_report(report), encoding="utf-8")
            return EXIT_OK if report["all_converged"] else EXIT_FAILED
        orders = tuple(args.orders) if args.orders else VERIFY_ORDERS
        if any(not 1 < g < 2 for g in orders):
            raise UsageError(f"orders must lie in (1, 2), got {list(orders)}")
        report = run_verification(orders, args.seed, fault=args.inject_fault)
        for c in report["checks"]:
            if not c["passed"]:
                props = c.get("failed_properties")
                extra = f" (failed properties: {', '.join(props)})" if props else ""
                print(f"FAILED {c['name']}{extra}", file=sys.stderr)
        n = len(report["checks"])
        print(f"{n - len(report['failed'])}/{n} checks passed")
        if args.out:
            Path(args.out).write_text(dump_report(report), encoding="utf-8")
        return EXIT_OK if report["passed"] else EXIT_FAILED
    except UsageError as exc:
        print(f"sfdetau: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
