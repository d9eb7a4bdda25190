"""Tau (sine-transform) preconditioner and a Strang circulant baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .operator import SfdeOperator, kron_axis_dense
from .transforms import GridShape, apply_sine_transform, tau_eigenvalues, tau_matrix_dense, toeplitz_dense

__all__ = [
    "mean_coefficient",
    "TauPreconditioner",
    "build_tau",
    "apply_inverse_tau",
    "tau_dense",
    "tilde_p_dense",
    "CirculantPreconditioner",
    "build_strang_circulant",
    "apply_inverse_circulant",
    "strang_column",
    "IdentityPreconditioner",
    "MEANS",
]


def mean_coefficient(lower: float, upper: float) -> float:
    """Geometric mean ``sqrt(lower * upper)`` of coefficient bounds."""
    if not (0 < lower <= upper) or not math.isfinite(upper):
        raise ValueError(f"need 0 < lower <= upper, got ({lower}, {upper})")
    return math.sqrt(lower * upper)


MEANS = ("geometric", "arithmetic")


def _means(op: SfdeOperator, bounds, mean: str = "geometric") -> list[float]:
    """Scalar stand-in for each coefficient.

    ``"geometric"`` uses ``sqrt(lower * upper)`` of the bounds (default: the
    sampled grid extremes).  ``"arithmetic"`` averages the sampled values and
    suits coefficients whose infimum over the domain is zero, where the grid
    minimum shrinks with refinement and drags the geometric mean along.
    """
    if mean not in MEANS:
        raise ValueError(f"unknown mean {mean!r}; choose from {MEANS}")
    if mean == "arithmetic":
        if bounds is not None:
            raise ValueError("explicit bounds only apply to the geometric mean")
        return [float(np.mean(t.coef)) for t in op.terms]
    if bounds is None:
        bounds = op.bounds
    if len(bounds) != op.shape.ndim:
        raise ValueError("need one (lower, upper) pair per dimension")
    return [mean_coefficient(lo, hi) for lo, hi in bounds]


def _outer_sum(shape: GridShape, factors: Sequence[np.ndarray]) -> np.ndarray:
    """``1 + sum_i factors[i][k_i]`` laid out as a grid array."""
    lam = np.ones(shape.array_shape, dtype=factors[0].dtype if factors else float)
    for i, f in enumerate(factors):
        view = [1] * shape.ndim
        view[shape.array_axis(i)] = -1
        lam = lam + f.reshape(view)
    return lam


@dataclass
class TauPreconditioner:
    shape: GridShape
    lam: np.ndarray
    dbar: list[float]
    etas: list[float]

    @property
    def size(self) -> int:
        return self.shape.size

    def solve(self, v) -> np.ndarray:
        return apply_inverse_tau(self, v)

    __call__ = solve

    def matvec(self, v) -> np.ndarray:
        """``P v`` (used for exactness checks)."""
        return self.power(v, 1.0)

    def power(self, v, exponent: float) -> np.ndarray:
        """``P**exponent v`` computed in the sine basis."""
        w = apply_sine_transform(self.shape, v)
        w *= self.lam.reshape(-1) ** exponent
        return apply_sine_transform(self.shape, w)


def build_tau(op: SfdeOperator, bounds=None, mean: str = "geometric") -> TauPreconditioner:
    """Diagonal of ``P = I + sum_i eta_i dbar_i I (x) tau(S_i) (x) I`` in the sine basis.

    ``bounds`` defaults to the sampled ``(min, max)`` of each coefficient.
    """
    dbar = _means(op, bounds, mean)
    factors = [
        t.eta * d * tau_eigenvalues(t.symbol) for t, d in zip(op.terms, dbar)
    ]
    lam = _outer_sum(op.shape, factors).reshape(-1)
    return TauPreconditioner(op.shape, lam, dbar, op.etas)


def apply_inverse_tau(p: TauPreconditioner, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (p.size,):
        raise ValueError(f"expected a vector of length {p.size}, got shape {v.shape}")
    w = apply_sine_transform(p.shape, v)
    w /= p.lam
    return apply_sine_transform(p.shape, w)


def _mean_dense(op: SfdeOperator, bounds, block, mean: str = "geometric") -> np.ndarray:
    J = op.size
    if J > 4096:
        raise ValueError("dense preconditioner assembly limited to J <= 4096")
    dbar = _means(op, bounds, mean)
    P = np.eye(J)
    for i, (t, d) in enumerate(zip(op.terms, dbar)):
        P += t.eta * d * kron_axis_dense(op.shape, i, block(t.symbol))
    return P


def tau_dense(op: SfdeOperator, bounds=None, mean: str = "geometric") -> np.ndarray:
    """Dense ``P`` assembled from materialized tau matrices (test oracle)."""
    return _mean_dense(op, bounds, tau_matrix_dense, mean)


def tilde_p_dense(op: SfdeOperator, bounds=None, mean: str = "geometric") -> np.ndarray:
    """Dense ``I + sum_i eta_i dbar_i I (x) S_i (x) I`` (mean-coefficient matrix)."""
    return _mean_dense(op, bounds, toeplitz_dense, mean)


def strang_column(first_column) -> np.ndarray:
    """First column of the Strang circulant of a symmetric Toeplitz matrix."""
    t = np.asarray(first_column, dtype=float)
    M = t.size
    k = np.arange(M)
    return np.where(k <= M // 2, t[np.minimum(k, M - 1)], t[(M - k) % M])


@dataclass
class CirculantPreconditioner:
    shape: GridShape
    fourier_diagonal: np.ndarray

    @property
    def size(self) -> int:
        return self.shape.size

    def solve(self, v) -> np.ndarray:
        return apply_inverse_circulant(self, v)

    __call__ = solve


def build_strang_circulant(
    op: SfdeOperator, bounds=None, tol: float = 1e-14, mean: str = "geometric"
) -> CirculantPreconditioner:
    dbar = _means(op, bounds, mean)
    factors = [
        t.eta * d * np.fft.fft(strang_column(t.symbol.first_column))
        for t, d in zip(op.terms, dbar)
    ]
    diag = _outer_sum(op.shape, factors)
    if np.min(np.abs(diag)) <= tol * np.max(np.abs(diag)):
        raise ValueError("Strang circulant preconditioner is singular for this configuration")
    return CirculantPreconditioner(op.shape, diag)


def apply_inverse_circulant(p: CirculantPreconditioner, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    a = p.shape.as_array(v)
    out = np.fft.ifftn(np.fft.fftn(a) / p.fourier_diagonal)
    scale = np.linalg.norm(v)
    resid = np.linalg.norm(out.imag)
    if resid > 1e-8 * max(scale, np.finfo(float).tiny):
        raise ArithmeticError(f"circulant inverse produced imaginary residue {resid:.3e}")
    return out.real.reshape(-1)


class IdentityPreconditioner:
    def __init__(self, size: int):
        self.size = size

    def solve(self, v) -> np.ndarray:
        return np.array(v, dtype=float, copy=True)

    __call__ = solve
