"""Acceptance criteria, one test per criterion.

Each test records a single ``[PASS]``/``[FAIL]`` line with the measured values
before asserting; the lines are repeated in the pytest terminal summary.
"""

import math
import numpy as np
import pytest

from sfdetau.analysis import (
    commutator_bound_check,
    convergence_constants,
    tau_spectrum_check,
    convergence_rate_check,
)
from sfdetau.coefficients import Scheme, make_coeffs, validate_properties
from sfdetau.operator import AxisTerm, SfdeOperator, materialize_dense
from sfdetau.preconditioners import build_tau, tau_dense
from sfdetau.problems import example1, example2, time_step_solve

from conftest import ACCEPTANCE_LINES


def report(criterion: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, detail


def _iter_mean(spec):
    rep = time_step_solve(spec, Scheme.CENTERED_DIFFERENCE, "tau", keep_history=False)
    assert rep.all_converged
    return rep.iter_mean


EXAMPLE1_REFERENCE = [
    ((1.1, 1.9), 4, 6.0),
    ((1.5, 1.9), 4, 6.0),
    ((1.9, 1.9), 4, 5.0),
    ((1.1, 1.9), 6, 5.0),
    ((1.5, 1.9), 6, 5.0),
    ((1.9, 1.9), 6, 4.0),
]


def test_criterion_01_example1_iterations():
    cells = []
    ok = True
    for orders, q, expected in EXAMPLE1_REFERENCE:
        got = _iter_mean(example1(*orders, 2**8 - 1, 2**q))
        ok &= abs(got - expected) <= 1.0
        cells.append(f"{orders} N=2^{q}: {got:.1f} (ref {expected})")
    report("1 (Example 1 reference counts, M+1=2^8, +-1)", ok, "; ".join(cells))


def test_criterion_02_example2_iterations():
    cells = []
    ok = True
    for orders, q, expected in [((1.1, 1.9, 1.5), 1, 8.0), ((1.9, 1.5, 1.1), 3, 7.0)]:
        got = _iter_mean(example2(*orders, 2**6 - 1, 2**q))
        ok &= abs(got - expected) <= 1.0
        cells.append(f"{orders} N=2^{q}: {got:.1f} (ref {expected})")
    report("2 (Example 2 reference counts, M+1=2^6, +-1)", ok, "; ".join(cells))


def test_criterion_03_size_independence():
    its = [_iter_mean(example1(1.5, 1.9, 2**p - 1, 2**4)) for p in (7, 8, 9)]
    report("3 (size independence, spread <= 1)", max(its) - min(its) <= 1.0,
           f"M+1=2^7,2^8,2^9 -> {', '.join(f'{x:.1f}' for x in its)}")


def test_criterion_04_tau_spectral_sandwich():
    lo, hi = math.inf, -math.inf
    failures = []
    for scheme in Scheme:
        for g in (1.1, 1.5, 1.9):
            for M in (8, 64, 512):
                r = tau_spectrum_check(scheme, g, M)
                lo, hi = min(lo, r.min_eig), max(hi, r.max_eig)
                if not r.passed:
                    failures.append(f"{scheme.value},{g},{M}")
    report("4 (pencil spectrum in (0.5, 1.5))", not failures,
           f"27 cases, eigenvalues in [{lo:.4f}, {hi:.4f}]" + (f"; failed {failures}" if failures else ""))


def test_criterion_05_commutator_decay():
    reps = []
    for M in (32, 64, 128, 256):
        z = 2.0 + np.arange(1, M + 1) / (M + 1)
        reps.append(commutator_bound_check(z, Scheme.CENTERED_DIFFERENCE, 1.5))
    bounds_ok = all(r.passed for r in reps)
    scaled = [r.scaled_norm for r in reps]
    trend_ok = all(b <= 1.1 * a for a, b in zip(scaled, scaled[1:]))
    report("5 (commutator bound and decay)", bounds_ok and trend_ok,
           "norm/bound " + ", ".join(f"M={r.M}: {r.norm:.2e}/{r.bound:.2e}" for r in reps)
           + "; scaled " + ", ".join(f"{s:.4f}" for s in scaled))


def _random_operator(rng, m):
    limits = {1: 1000, 2: 31, 3: 10}
    dims = tuple(int(rng.integers(2, limits[m] + 1)) for _ in range(m))
    J = int(np.prod(dims))
    scheme = list(Scheme)[int(rng.integers(3))]
    terms = [
        AxisTerm(float(rng.uniform(0.01, 10.0)), make_coeffs(scheme, float(rng.uniform(1.05, 1.95)), M).values,
                 rng.uniform(0.2, 5.0, J))
        for M in dims
    ]
    return SfdeOperator(dims, terms)


def test_criterion_06_preconditioner_exactness():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for trial in range(25):
        op = _random_operator(rng, 1 + trial % 3)
        assert op.size <= 1000
        P = tau_dense(op)
        v = rng.standard_normal(op.size)
        worst = max(worst, float(np.max(np.abs(P @ build_tau(op).solve(v) - v)) / np.max(np.abs(v))))
    report("6 (||P P^-1 v - v||_inf <= 1e-10 ||v||_inf)", worst <= 1e-10, f"worst relative {worst:.2e} over 25 draws")


def test_criterion_07_matrix_free_oracle():
    rng = np.random.default_rng(7)
    worst = 0.0
    for trial in range(25):
        op = _random_operator(rng, 1 + trial % 3)
        v = rng.standard_normal(op.size)
        Av = materialize_dense(op) @ v
        worst = max(worst, float(np.linalg.norm(op.matvec(v) - Av) / np.linalg.norm(Av)))
    report("7 (matrix-free A v vs dense, 1e-10)", worst <= 1e-10, f"worst relative {worst:.2e} over 25 operators")


def test_criterion_08_property_suite():
    failures = []
    for scheme in Scheme:
        for g in (1.1, 1.3, 1.5, 1.7, 1.9):
            rep = validate_properties(make_coeffs(scheme, g, 4096))
            failures += [f"{scheme.value},{g}:{c.name}" for c in rep.checks if not c.passed]
    report("8 (four properties, 3 schemes x 5 orders, K=4096)", not failures,
           "all 60 checks pass" if not failures else f"failed {failures}")


def test_criterion_09_convergence_rate():
    details = []
    ok = True
    for orders in [(1.1, 1.9), (1.5, 1.9), (1.9, 1.9)]:
        probe = example1(*orders, 2**5 - 1, 1)
        k = convergence_constants(probe)
        q = max(0, math.ceil(math.log2(1.0 / k.c_star)))
        spec = example1(*orders, 2**5 - 1, 2**q)
        rep = convergence_rate_check(spec, n_steps=3, constants=k)
        ok &= rep.passed and spec.dt <= k.c_star and 0 < k.theta < 1
        details.append(f"{orders}: c*={k.c_star:.2e} dt=2^-{q} theta={k.theta:.5f} worst ratio {rep.worst_ratio:.2e}")
    report("9 (||r_k|| <= theta^k ||r0_hat||)", ok, "; ".join(details))


def _per_step_time(M, steps=4, repeats=3):
    spec = example1(1.5, 1.9, M, 2**4)
    return min(time_step_solve(spec, n_steps=steps, keep_history=False).wall_times["per_step"]
               for _ in range(repeats))


def test_criterion_10_complexity_smoke():
    t8 = _per_step_time(2**8 - 1)
    t9 = _per_step_time(2**9 - 1)
    ratio = t9 / t8
    report("10 (doubling M+1 costs <= 5x per step)", ratio <= 5.0,
           f"per-step {t8 * 1e3:.1f} ms -> {t9 * 1e3:.1f} ms, ratio {ratio:.2f}")
