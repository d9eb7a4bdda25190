"""Numerical checks of the spectral estimates behind the tau preconditioner.

Everything here works on small dense matrices and is meant for verification,
not for production solves.  Coefficient bounds and Lipschitz seminorms are
estimated from grid samples, and the ``D_gamma`` norm of a coefficient
sequence is replaced by the maximum over a finite prefix.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .coefficients import Scheme, make_coeffs
from .krylov import SolverConfig, gmres
from .operator import SfdeOperator, build_operator, grid_points, materialize_dense
from .preconditioners import TauPreconditioner, build_tau
from .problems import ProblemSpec
from .transforms import GridShape, tau_matrix_dense, toeplitz_dense

__all__ = [
    "DGAMMA_PREFIX",
    "ConvergenceConstants",
    "lipschitz_seminorm_estimate",
    "dgamma_norm_proxy",
    "convergence_constants",
    "mu_gamma",
    "commutator",
    "SpectrumReport",
    "tau_spectrum_check",
    "CommutatorReport",
    "commutator_bound_check",
    "PreconditionedSpectrumReport",
    "preconditioned_spectrum_check",
    "rotated_residual_norm",
    "RateReport",
    "convergence_rate_check",
]

DGAMMA_PREFIX = 4096
TAU_SPECTRUM_LIMIT = 1024
COMMUTATOR_LIMIT = 512
DENSE_SPECTRUM_LIMIT = 4096


def lipschitz_seminorm_estimate(samples, dims: Sequence[int], axis: int, spacing: float) -> float:
    """Largest difference quotient along grid lines of dimension ``axis``.

    Parameters
    ----------
    samples : array_like
        Function values at the interior grid points, first dimension fastest.
    dims : sequence of int
        Grid size in each dimension.
    axis : int
        Grid dimension along which differences are taken.
    spacing : float
        Mesh width along ``axis``.

    Returns
    -------
    float
        ``max |w(x + h e_axis) - w(x)| / h``.  This never exceeds the true
        seminorm, so it is a lower estimate.
    """
    shape = GridShape(dims)
    if shape.dims[axis] < 2:
        raise ValueError(f"axis {axis} has a single grid point; no difference quotient exists")
    if not spacing > 0:
        raise ValueError("spacing must be positive")
    a = shape.as_array(np.asarray(samples, dtype=float))
    diffs = np.abs(np.diff(a, axis=shape.array_axis(axis)))
    return float(diffs.max() / spacing)


def dgamma_norm_proxy(scheme: Scheme | str, gamma: float, prefix: int = DGAMMA_PREFIX) -> float:
    return make_coeffs(scheme, gamma, prefix).dgamma_norm()


def mu_gamma(x: float, y: float, z: float, gamma: float) -> float:
    """``x y**2 / (2 z (2 - gamma))``."""
    if not (x > 0 and z > 0 and 1 < gamma < 2):
        raise ValueError("mu_gamma needs x, z > 0 and gamma in (1, 2)")
    return x * y * y / (2.0 * z * (2.0 - gamma))


@dataclass
class ConvergenceConstants:
    """Constants of the step-size-independent convergence estimate.

    ``c_star`` uses the minimum of ``c0`` and ``c3/b3``; ``c_star_max`` is the
    variant with the maximum, kept for comparison.  ``math.inf`` stands in for
    ratios whose denominator vanishes.
    """

    c1: float
    c2: float
    c3: float
    b1: float
    b2: float
    b3: float
    c0: float
    c_star: float
    c_star_max: float
    theta: float
    lower: list[float]
    upper: list[float]
    dbar: list[float]
    seminorms: list[float]
    d_norms: list[float]
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {k: _jsonable(v) for k, v in asdict(self).items()}


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else "-inf" if v < 0 else "nan"
    if isinstance(v, list):
        return [_jsonable(x) for x in v]
    return v


def _ratio(num: float, den: float) -> float:
    return math.inf if den == 0.0 else num / den


def convergence_constants(
    spec: ProblemSpec,
    scheme: Scheme | str = Scheme.CENTERED_DIFFERENCE,
    dims: Sequence[int] | None = None,
    prefix: int = DGAMMA_PREFIX,
) -> ConvergenceConstants:
    """Evaluate ``c1, c2, c3, b1, b2, b3, c0, c_star`` and ``theta`` for a problem.

    Coefficient bounds and seminorms come from samples on the interior grid
    ``dims`` (default: the problem's own grid).
    """
    dims = tuple(spec.dims if dims is None else dims)
    shape = GridShape(dims)
    pts = grid_points(spec.lower, spec.upper, dims)
    lower, upper, dbar, semis, dnorms = [], [], [], [], []
    for i, fn in enumerate(spec.coefficients):
        values = np.broadcast_to(np.asarray(fn(*pts), dtype=float), (shape.size,))
        lo, hi = float(values.min()), float(values.max())
        if not lo > 0:
            raise ValueError(f"coefficient {i} has non-positive lower bound {lo}; constants undefined")
        h = (spec.upper[i] - spec.lower[i]) / (dims[i] + 1)
        lower.append(lo)
        upper.append(hi)
        dbar.append(math.sqrt(lo * hi))
        semis.append(lipschitz_seminorm_estimate(values, dims, i, h) if dims[i] > 1 else 0.0)
        dnorms.append(dgamma_norm_proxy(scheme, spec.orders[i], prefix))

    c1 = min(math.sqrt(lo / (2 * hi)) for lo, hi in zip(lower, upper))
    c2 = max(math.sqrt(2 * hi / lo) for lo, hi in zip(lower, upper))
    c3 = max((hi * hi + lo * lo + 1) / (2 * db) for lo, hi, db in zip(lower, upper, dbar))

    b1 = b2 = b3 = 0.0
    for i, a in enumerate(spec.orders):
        length = spec.upper[i] - spec.lower[i]
        core = dnorms[i] * semis[i] ** 2
        lo, hi = lower[i], upper[i]
        b1 += core * length**2 / (4 * (1 - math.sqrt(2) / 2) * lo * (2 - a))
        b2 += core * length**2 / (4 * (math.sqrt(2) - 1) * hi * (2 - a))
        b3 += core * hi**2 * length ** (2 + a) / (lo**2 * (2 - a))

    c0 = min(_ratio(1 - c1, b1), _ratio(c2 - 1, b2))
    c_star = min(c0, _ratio(c3, b3))
    c_star_max = max(c0, _ratio(c3, b3))
    theta = math.sqrt(1 - c1 * c1 / (3 * c1 * c2 + 9 * c3 * c3))
    notes = [
        "seminorms are grid difference quotients (lower estimates)",
        f"D_gamma norms use the maximum over the first {prefix} coefficients",
    ]
    if c_star != c_star_max:
        notes.append("min and max forms of c_star differ; c_star uses the min")
    return ConvergenceConstants(
        c1, c2, c3, b1, b2, b3, c0, c_star, c_star_max, theta, lower, upper, dbar, semis, dnorms, notes
    )


@dataclass
class SpectrumReport:
    scheme: str
    gamma: float
    M: int
    min_eig: float
    max_eig: float
    passed: bool

    def as_dict(self) -> dict:
        return asdict(self)


def tau_spectrum_check(scheme: Scheme | str, gamma: float, M: int) -> SpectrumReport:
    """Generalized eigenvalues of the pencil ``(S, tau(S))`` must lie in ``(1/2, 3/2)``."""
    if not 1 <= M <= TAU_SPECTRUM_LIMIT:
        raise ValueError(f"M must lie in [1, {TAU_SPECTRUM_LIMIT}], got {M}")
    seq = make_coeffs(scheme, gamma, M)
    S = toeplitz_dense(seq.values)
    tS = tau_matrix_dense(seq.values)
    w = scipy.linalg.eigh(S, tS, eigvals_only=True)
    lo, hi = float(w[0]), float(w[-1])
    return SpectrumReport(Scheme(scheme).value, float(gamma), int(M), lo, hi, bool(lo > 0.5 and hi < 1.5))


def commutator(Z, H) -> np.ndarray:
    """``Z H + H Z - 2 Z^{1/2} H Z^{1/2}`` for a diagonal ``Z`` given by its entries."""
    z = np.asarray(Z, dtype=float)
    r = np.sqrt(z)
    return z[:, None] * H + H * z[None, :] - 2.0 * r[:, None] * H * r[None, :]


@dataclass
class CommutatorReport:
    M: int
    gamma: float
    norm: float
    bound: float
    scaled_norm: float
    passed: bool

    def as_dict(self) -> dict:
        return asdict(self)


def commutator_bound_check(
    Z, scheme: Scheme | str, gamma: float, prefix: int = DGAMMA_PREFIX
) -> CommutatorReport:
    """Compare the spectral norm of the commutator-like matrix with its decay bound.

    The bound is ``mu_gamma(||s||, (M+1) grad(Z), min Z) / (M+1)**gamma``.
    """
    z = np.asarray(Z, dtype=float).ravel()
    M = z.size
    if not 1 <= M <= COMMUTATOR_LIMIT:
        raise ValueError(f"diagonal length must lie in [1, {COMMUTATOR_LIMIT}], got {M}")
    if not np.all(z > 0):
        raise ValueError("diagonal entries must be positive")
    S = toeplitz_dense(make_coeffs(scheme, gamma, M).values)
    norm = float(np.linalg.norm(commutator(z, S), 2))
    grad = float(np.max(np.abs(np.diff(z)))) if M > 1 else 0.0
    b_tilde = (M + 1) * grad
    scale = (M + 1) ** gamma
    bound = mu_gamma(dgamma_norm_proxy(scheme, gamma, prefix), b_tilde, float(z.min()), gamma) / scale
    # rounding in the dense product leaves a residue of order eps * ||S|| * max z
    slack = 64 * np.finfo(float).eps * np.abs(S).sum(axis=0).max() * float(z.max())
    return CommutatorReport(M, float(gamma), norm, bound, norm * scale, bool(norm <= bound + slack))


@dataclass
class PreconditionedSpectrumReport:
    dt: float
    c_star: float
    hypothesis_met: bool
    h_min: float
    h_max: float
    skew_radius: float
    h_lower_bound: float
    h_upper_bound: float
    skew_bound: float
    passed: bool

    def as_dict(self) -> dict:
        return {k: _jsonable(v) for k, v in asdict(self).items()}


def _sqrt_pair(prec: TauPreconditioner) -> tuple[np.ndarray, np.ndarray]:
    eye = np.eye(prec.size)
    half = np.column_stack([prec.power(col, 0.5) for col in eye])
    inv_half = np.column_stack([prec.power(col, -0.5) for col in eye])
    return half, inv_half


def preconditioned_spectrum_check(
    spec: ProblemSpec,
    scheme: Scheme | str = Scheme.CENTERED_DIFFERENCE,
    constants: ConvergenceConstants | None = None,
) -> PreconditionedSpectrumReport:
    """Dense check of ``P^{-1/2} A P^{-1/2}`` against the constants.

    Eigenvalues of its symmetric part must lie in ``[c1/2, 3 c2/2]`` and the
    spectral radius of its skew part must not exceed ``3 c3/2``.  The result
    records whether ``dt <= c_star`` held; when it did not, the checks still
    run but only for information.
    """
    op = build_operator(spec.dims, spec.lower, spec.upper, spec.orders, spec.coefficients, spec.dt, scheme)
    if op.size > DENSE_SPECTRUM_LIMIT:
        raise ValueError(f"dense spectrum check limited to J <= {DENSE_SPECTRUM_LIMIT}")
    k = constants or convergence_constants(spec, scheme)
    prec = build_tau(op)
    _, inv_half = _sqrt_pair(prec)
    A = materialize_dense(op)
    B = inv_half @ A @ inv_half
    H = 0.5 * (B + B.T)
    S = 0.5 * (B - B.T)
    w = np.linalg.eigvalsh(H)
    skew = float(np.max(np.abs(np.linalg.eigvalsh(1j * S))))
    lo_b, hi_b, sk_b = k.c1 / 2, 1.5 * k.c2, 1.5 * k.c3
    tol = 1e-10
    passed = bool(w[0] >= lo_b - tol and w[-1] <= hi_b + tol and skew <= sk_b + tol)
    return PreconditionedSpectrumReport(
        spec.dt, k.c_star, bool(spec.dt <= k.c_star), float(w[0]), float(w[-1]), skew, lo_b, hi_b, sk_b, passed
    )


def rotated_residual_norm(op: SfdeOperator, prec: TauPreconditioner, b, u0) -> float:
    """``||P^{-1/2} (b - A u0)||_2``, the reference in the rate estimate."""
    r = np.asarray(b, dtype=float) - op.matvec(u0)
    return float(np.linalg.norm(prec.power(r, -0.5)))


@dataclass
class RateReport:
    theta: float
    c_star: float
    dt: float
    steps: int
    worst_ratio: float
    passed: bool
    per_step: list[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {k: _jsonable(v) for k, v in asdict(self).items()}


def convergence_rate_check(
    spec: ProblemSpec,
    scheme: Scheme | str = Scheme.CENTERED_DIFFERENCE,
    n_steps: int = 3,
    cfg: SolverConfig | None = None,
    constants: ConvergenceConstants | None = None,
    slack: float = 1e-10,
) -> RateReport:
    """Run ``n_steps`` backward-Euler steps and test ``||r_k|| <= theta**k ||r0_hat||``.

    ``r_k`` are the preconditioned GMRES residuals and ``r0_hat`` the rotated
    initial residual of each step.  ``worst_ratio`` is the largest observed
    ``||r_k|| / (theta**k ||r0_hat||)``; the check passes when it stays at or
    below ``1 + slack``.
    """
    k_const = constants or convergence_constants(spec, scheme)
    theta = k_const.theta
    if not 0 < theta < 1:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    cfg = cfg or SolverConfig(tol_rel=1e-10, max_iters=200)
    op = build_operator(spec.dims, spec.lower, spec.upper, spec.orders, spec.coefficients, spec.dt, scheme)
    prec = build_tau(op)
    pts = spec.points()
    u = np.asarray(spec.initial(*pts), dtype=float).reshape(-1)
    worst = 0.0
    per_step = []
    steps = min(int(n_steps), spec.N)
    for n in range(1, steps + 1):
        b = u + spec.dt * np.asarray(spec.source(*pts, n * spec.dt), dtype=float).reshape(-1)
        ref = rotated_residual_norm(op, prec, b, u)
        res = gmres(op.matvec, prec.solve, b, u, cfg)
        ratios = [r / (theta**k * ref) for k, r in enumerate(res.residual_norms) if k >= 1]
        step_worst = float(max(ratios)) if ratios else 0.0
        worst = max(worst, step_worst)
        per_step.append({"step": n, "iterations": res.iterations, "r0_hat": ref, "worst_ratio": step_worst})
        u = res.solution
    return RateReport(theta, k_const.c_star, spec.dt, steps, worst, bool(worst <= 1 + slack), per_step)
