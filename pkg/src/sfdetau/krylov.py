"""Left-preconditioned GMRES with modified Gram-Schmidt Arnoldi."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = ["SolverConfig", "KrylovResult", "BreakdownError", "gmres"]

LinearMap = Callable[[np.ndarray], np.ndarray]


class BreakdownError(ArithmeticError):
    """Arnoldi stalled while the residual is still above tolerance."""


@dataclass(frozen=True)
class SolverConfig:
    tol_rel: float = 1e-7
    max_iters: int = 500
    restart: int | None = None
    reference: str = "initial"

    def __post_init__(self):
        if self.reference not in ("initial", "rhs"):
            raise ValueError(f"reference must be 'initial' or 'rhs', got {self.reference!r}")
        if not 0 < self.tol_rel < 1:
            raise ValueError(f"tol_rel must lie in (0, 1), got {self.tol_rel}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.restart is not None and self.restart < 1:
            raise ValueError("restart must be positive when given")


@dataclass
class KrylovResult:
    solution: np.ndarray
    iterations: int
    residual_norms: list[float] = field(default_factory=list)
    converged: bool = False


def _check_finite(x, what):
    if not np.all(np.isfinite(x)):
        raise FloatingPointError(f"non-finite value encountered in {what}")


def gmres(
    apply_A: LinearMap,
    apply_Pinv: LinearMap | None,
    b,
    x0=None,
    cfg: SolverConfig | None = None,
) -> KrylovResult:
    """Solve ``A x = b`` by GMRES on ``P^{-1} A x = P^{-1} b``.

    ``residual_norms[k]`` is ``||P^{-1}(b - A x_k)||_2``; iteration ``k`` stops
    once it drops to ``tol_rel * residual_norms[0]``, or to
    ``tol_rel * ||P^{-1} b||_2`` when ``cfg.reference == "rhs"`` (the two agree
    for a zero initial guess).  With ``restart`` the Krylov basis is rebuilt
    from the current iterate every ``restart`` steps.
    """
    cfg = cfg or SolverConfig()
    b = np.asarray(b, dtype=float)
    n = b.size
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float, copy=True)
    Pinv = apply_Pinv if apply_Pinv is not None else (lambda v: v)

    def prec_residual(x):
        r = Pinv(b - apply_A(x))
        _check_finite(r, "preconditioned residual")
        return r

    r = prec_residual(x)
    beta = float(np.linalg.norm(r))
    history = [beta]
    if cfg.reference == "rhs":
        target = cfg.tol_rel * float(np.linalg.norm(Pinv(b)))
    else:
        target = cfg.tol_rel * beta
    if beta <= target:
        return KrylovResult(x, 0, history, True)
    cycle = cfg.restart or cfg.max_iters
    total = 0

    while True:
        m = min(cycle, cfg.max_iters - total)
        V = np.empty((m + 1, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        k_done = 0
        converged = False
        for k in range(m):
            # copy: user maps may hand back their argument, which is a row of V
            w = np.array(Pinv(apply_A(V[k])), dtype=float)
            _check_finite(w, "Arnoldi vector")
            wnorm = float(np.linalg.norm(w))
            for j in range(k + 1):
                H[j, k] = np.dot(V[j], w)
                w -= H[j, k] * V[j]
            hnext = float(np.linalg.norm(w))
            H[k + 1, k] = hnext
            _check_finite(H[: k + 2, k], "Hessenberg column")
            for j in range(k):
                hj, hj1 = H[j, k], H[j + 1, k]
                H[j, k] = cs[j] * hj + sn[j] * hj1
                H[j + 1, k] = -sn[j] * hj + cs[j] * hj1
            denom = np.hypot(H[k, k], H[k + 1, k])
            if denom == 0.0:
                raise BreakdownError("zero column in the Hessenberg matrix")
            cs[k] = H[k, k] / denom
            sn[k] = H[k + 1, k] / denom
            H[k, k] = denom
            H[k + 1, k] = 0.0
            g[k + 1] = -sn[k] * g[k]
            g[k] = cs[k] * g[k]
            res = abs(g[k + 1])
            history.append(res)
            k_done = k + 1
            if res <= target:
                converged = True
                break
            if hnext <= 1e-14 * max(wnorm, 1.0):
                # invariant subspace found: the least-squares residual should vanish
                raise BreakdownError(
                    f"Arnoldi breakdown at step {k + 1} with residual {res:.3e} above target {target:.3e}"
                )
            V[k + 1] = w / hnext
        y = np.linalg.solve(np.triu(H[:k_done, :k_done]), g[:k_done]) if k_done else np.zeros(0)
        x = x + V[:k_done].T @ y
        total += k_done
        if converged or total >= cfg.max_iters:
            return KrylovResult(x, total, history, converged)
        r = prec_residual(x)
        beta = float(np.linalg.norm(r))
        history[-1] = beta
        if beta <= target:
            return KrylovResult(x, total, history, True)
