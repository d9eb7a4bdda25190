"""Manufactured-solution test problems and the implicit time-stepping driver."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .coefficients import Scheme
from .krylov import KrylovResult, SolverConfig, gmres
from .operator import SfdeOperator, build_operator, grid_points
from .preconditioners import (
    IdentityPreconditioner,
    build_strang_circulant,
    build_tau,
)

__all__ = [
    "ProblemSpec",
    "SolveReport",
    "example1",
    "example2",
    "riesz_of_bump",
    "relative_error",
    "build_preconditioner",
    "time_step_solve",
    "PRECONDITIONERS",
    "BENCHMARK_CONFIG",
]

PRECONDITIONERS = ("tau", "circulant", "none")

# Stopping test measured against ||P^{-1} b||; with warm starts this is what
# the reference iteration counts correspond to.
BENCHMARK_CONFIG = SolverConfig(tol_rel=1e-7, max_iters=500, reference="rhs")


@dataclass
class ProblemSpec:
    name: str
    dims: tuple[int, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    T: float
    N: int
    orders: tuple[float, ...]
    coefficients: Sequence[Callable[..., np.ndarray]]
    source: Callable[..., np.ndarray]
    initial: Callable[..., np.ndarray]
    exact: Callable[..., np.ndarray] | None = None
    coefficient_mean: str = "geometric"

    def __post_init__(self):
        m = len(self.dims)
        if not (len(self.lower) == len(self.upper) == len(self.orders) == len(self.coefficients) == m):
            raise ValueError("problem data inconsistent with the grid dimension")
        if any(not 1 < a < 2 for a in self.orders):
            raise ValueError(f"fractional orders must lie in (1, 2), got {self.orders}")
        if any(not hi > lo for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("each interval needs lower < upper")
        if not self.T > 0 or self.N < 1:
            raise ValueError("need T > 0 and N >= 1")

    @property
    def m(self) -> int:
        return len(self.dims)

    @property
    def dt(self) -> float:
        return self.T / self.N

    def points(self):
        return grid_points(self.lower, self.upper, self.dims)


@dataclass
class SolveReport:
    problem: str
    preconditioner: str
    iterations: list[int] = field(default_factory=list)
    residual_histories: list[list[float]] = field(default_factory=list)
    converged: list[bool] = field(default_factory=list)
    E_MN: float | None = None
    wall_times: dict[str, float] = field(default_factory=dict)
    solution: np.ndarray | None = field(default=None, repr=False)

    @property
    def iter_mean(self) -> float:
        return float(np.mean(self.iterations)) if self.iterations else 0.0

    @property
    def all_converged(self) -> bool:
        return all(self.converged)


def riesz_of_bump(x, length: float, alpha: float, printed: bool = False) -> np.ndarray:
    """Riesz derivative of ``x**2 (L-x)**2`` on ``(0, L)``.

    The bump is ``sum_j c_j x**j`` with ``c = (L**2, -2L, 1)`` for ``j = 2, 3, 4``;
    the left Riemann-Liouville derivative of ``x**j`` is
    ``j!/Gamma(j+1-alpha) x**(j-alpha)`` and the right one mirrors it.
    ``printed=True`` divides by an extra ``Gamma(2-alpha)``.
    """
    x = np.asarray(x, dtype=float)
    c = {2: length**2, 3: -2.0 * length, 4: 1.0}
    acc = np.zeros_like(x)
    for j, cj in c.items():
        acc += cj * math.factorial(j) / math.gamma(j + 1 - alpha) * (x ** (j - alpha) + (length - x) ** (j - alpha))
    scale = -1.0 / (2.0 * math.cos(alpha * math.pi / 2.0))
    if printed:
        scale /= math.gamma(2.0 - alpha)
    return scale * acc


def _bump(x, length):
    return x**2 * (length - x) ** 2


def example1(alpha: float, beta: float, M: int, N: int, printed_source: bool = False) -> ProblemSpec:
    """2-D problem on ``(0,2)**2`` with exact solution ``exp(-t) x^2(2-x)^2 y^2(2-y)^2``.

    ``M`` is the number of interior points per direction (``M+1`` partitions).
    """
    L = 2.0

    def d(x, y):
        return 1.0 + x**alpha + (L - x) ** alpha + y**beta + (L - y) ** beta

    def e(x, y):
        return 2.0 + np.cos(np.pi * x / 5.0) + np.cos(np.pi * y / 5.0)

    def psi(x, y):
        return _bump(x, L) * _bump(y, L)

    def exact(x, y, t):
        return math.exp(-t) * psi(x, y)

    def f(x, y, t):
        rx = riesz_of_bump(x, L, alpha, printed_source)
        ry = riesz_of_bump(y, L, beta, printed_source)
        return math.exp(-t) * (-psi(x, y) - d(x, y) * _bump(y, L) * rx - e(x, y) * _bump(x, L) * ry)

    return ProblemSpec(
        name="example1",
        dims=(M, M),
        lower=(0.0, 0.0),
        upper=(L, L),
        T=1.0,
        N=N,
        orders=(alpha, beta),
        coefficients=(d, e),
        source=f,
        initial=psi,
        exact=exact,
    )


def example2(alpha1: float, alpha2: float, alpha3: float, M: int, N: int, printed_source: bool = False) -> ProblemSpec:
    """3-D problem on ``(0,1)**3`` with exact solution ``exp(-t) prod x_i^2(1-x_i)^2``."""
    orders = (alpha1, alpha2, alpha3)
    L = 1.0

    def d1(*x):
        return sum(xi**a * (L - xi) ** a for xi, a in zip(x, orders))

    def d2(*x):
        return 2.0 + sum(np.cos(np.pi * xi / 2.0) for xi in x)

    def d3(*x):
        return 1.0 + x[0] * x[1] * x[2]

    coefs = (d1, d2, d3)

    def psi(*x):
        return _bump(x[0], L) * _bump(x[1], L) * _bump(x[2], L)

    def exact(*args):
        *x, t = args
        return math.exp(-t) * psi(*x)

    def f(*args):
        *x, t = args
        out = -psi(*x)
        for i, (xi, a, di) in enumerate(zip(x, orders, coefs)):
            if printed_source:
                others = _bump(xi, L)
            else:
                others = np.prod([_bump(xk, L) for k, xk in enumerate(x) if k != i], axis=0)
            out = out - di(*x) * others * riesz_of_bump(xi, L, a, printed_source)
        return math.exp(-t) * out

    return ProblemSpec(
        name="example2",
        dims=(M, M, M),
        lower=(0.0,) * 3,
        upper=(L,) * 3,
        T=1.0,
        N=N,
        orders=orders,
        coefficients=coefs,
        source=f,
        initial=psi,
        exact=exact,
        # d1 vanishes on the boundary, so its grid minimum tends to zero
        coefficient_mean="arithmetic",
    )


def relative_error(exact_values, computed_values) -> float:
    """``||u - u~||_inf / ||u||_inf``."""
    u = np.asarray(exact_values, dtype=float)
    v = np.asarray(computed_values, dtype=float)
    if u.shape != v.shape:
        raise ValueError("exact and computed vectors differ in length")
    denom = np.max(np.abs(u)) if u.size else 0.0
    if denom == 0.0:
        raise ValueError("exact solution is identically zero")
    return float(np.max(np.abs(u - v)) / denom)


def build_preconditioner(op: SfdeOperator, kind: str, mean: str = "geometric"):
    if kind == "tau":
        return build_tau(op, mean=mean)
    if kind == "circulant":
        return build_strang_circulant(op, mean=mean)
    if kind == "none":
        return IdentityPreconditioner(op.size)
    raise ValueError(f"unknown preconditioner {kind!r}; choose from {PRECONDITIONERS}")


def time_step_solve(
    spec: ProblemSpec,
    scheme: Scheme | str = Scheme.CENTERED_DIFFERENCE,
    preconditioner: str = "tau",
    cfg: SolverConfig | None = None,
    warm_start: bool = True,
    n_steps: int | None = None,
    keep_history: bool = True,
    mean: str | None = None,
) -> SolveReport:
    """Backward-Euler stepping ``A u^n = u^{n-1} + dt f^n`` solved by preconditioned GMRES.

    ``n_steps`` truncates the run after that many steps; the error is only
    computed when the final time ``T`` is reached.  ``mean`` overrides the
    problem's ``coefficient_mean``.
    """
    cfg = cfg or BENCHMARK_CONFIG
    steps = spec.N if n_steps is None else min(int(n_steps), spec.N)
    report = SolveReport(spec.name, preconditioner)

    t0 = time.perf_counter()
    op = build_operator(spec.dims, spec.lower, spec.upper, spec.orders, spec.coefficients, spec.dt, scheme)
    prec = build_preconditioner(op, preconditioner, mean or spec.coefficient_mean)
    pts = spec.points()
    report.wall_times["build"] = time.perf_counter() - t0

    u = np.asarray(spec.initial(*pts), dtype=float).reshape(-1).copy()
    dt = spec.dt
    t_solve = time.perf_counter()
    for n in range(1, steps + 1):
        b = u + dt * np.asarray(spec.source(*pts, n * dt), dtype=float).reshape(-1)
        x0 = u if warm_start else None
        try:
            res: KrylovResult = gmres(op.matvec, prec.solve, b, x0, cfg)
        except ArithmeticError:
            report.iterations.append(cfg.max_iters)
            report.converged.append(False)
            report.residual_histories.append([])
            continue
        u = res.solution
        report.iterations.append(res.iterations)
        report.converged.append(res.converged)
        report.residual_histories.append(res.residual_norms if keep_history else [])
    report.wall_times["solve"] = time.perf_counter() - t_solve
    report.wall_times["per_step"] = report.wall_times["solve"] / max(steps, 1)
    report.solution = u
    if spec.exact is not None and steps == spec.N:
        report.E_MN = relative_error(np.asarray(spec.exact(*pts, spec.T)).reshape(-1), u)
    return report
