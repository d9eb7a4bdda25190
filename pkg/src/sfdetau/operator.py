"""Matrix-free system matrix ``A = I + sum_i eta_i D_i (I (x) S_i (x) I)``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .coefficients import Scheme, make_coeffs
from .transforms import GridShape, ToeplitzKernel, ToeplitzSymbol, toeplitz_dense

__all__ = [
    "AxisTerm",
    "SfdeOperator",
    "grid_points",
    "build_operator",
    "apply",
    "materialize_dense",
    "kron_axis_dense",
    "symmetric_part_extreme_eigs",
    "DENSE_LIMIT",
]

DENSE_LIMIT = 20000
EIG_LIMIT = 4096


@dataclass
class AxisTerm:
    """One fractional-derivative term: ``eta * diag(coef) (I (x) T(symbol) (x) I)``."""

    eta: float
    symbol: ToeplitzSymbol
    coef: np.ndarray = field(repr=False)
    order: float | None = None
    lower: float = field(init=False)
    upper: float = field(init=False)

    def __post_init__(self):
        if not np.isfinite(self.eta) or self.eta < 0:
            raise ValueError(f"eta must be finite and non-negative, got {self.eta}")
        if not isinstance(self.symbol, ToeplitzSymbol):
            self.symbol = ToeplitzSymbol(self.symbol)
        self.coef = np.asarray(self.coef, dtype=float).reshape(-1)
        self.lower = float(self.coef.min())
        self.upper = float(self.coef.max())


class SfdeOperator:
    def __init__(self, shape: GridShape | Sequence[int], terms: Sequence[AxisTerm]):
        self.shape = shape if isinstance(shape, GridShape) else GridShape(shape)
        if len(terms) != self.shape.ndim:
            raise ValueError("need exactly one term per grid dimension")
        for i, t in enumerate(terms):
            if t.symbol.size != self.shape.dims[i]:
                raise ValueError(f"symbol length {t.symbol.size} does not match dimension {i}")
            if t.coef.size != self.shape.size:
                raise ValueError(f"coefficient vector {i} must have length {self.shape.size}")
            if t.lower <= 0:
                raise ValueError(f"coefficient {i} must be positive on the grid")
        self.terms = list(terms)
        self._kernels = [ToeplitzKernel(t.symbol) for t in self.terms]
        self._coefs = [t.coef.reshape(self.shape.array_shape) for t in self.terms]

    @property
    def size(self) -> int:
        return self.shape.size

    @property
    def etas(self) -> list[float]:
        return [t.eta for t in self.terms]

    @property
    def bounds(self) -> list[tuple[float, float]]:
        return [(t.lower, t.upper) for t in self.terms]

    def matvec(self, v) -> np.ndarray:
        a = self.shape.as_array(np.asarray(v, dtype=float))
        out = a.copy()
        for i, (t, ker, c) in enumerate(zip(self.terms, self._kernels, self._coefs)):
            if t.eta == 0.0:
                continue
            out += t.eta * c * ker(a, self.shape.array_axis(i))
        return out.reshape(-1)

    __call__ = matvec


def grid_points(lower: Sequence[float], upper: Sequence[float], dims: Sequence[int]):
    """Interior grid coordinates, each as a length-``J`` vector in grid order."""
    shape = GridShape(dims)
    axes = [
        lo + (hi - lo) / (M + 1) * np.arange(1, M + 1) for lo, hi, M in zip(lower, upper, shape.dims)
    ]
    mesh = np.meshgrid(*axes[::-1], indexing="ij")[::-1]
    return [m.reshape(-1) for m in mesh]


def build_operator(
    dims: Sequence[int],
    lower: Sequence[float],
    upper: Sequence[float],
    orders: Sequence[float],
    coefficients: Sequence[Callable[..., np.ndarray]],
    dt: float,
    scheme: Scheme | str = Scheme.CENTERED_DIFFERENCE,
) -> SfdeOperator:
    """Discretize ``sum_i d_i(x) d^{alpha_i} u / d|x_i|^{alpha_i}`` for one implicit step.

    ``coefficients[i]`` is called with the interior coordinate vectors
    ``(x_1, ..., x_m)`` and must return positive values.
    """
    shape = GridShape(dims)
    if not (len(lower) == len(upper) == len(orders) == len(coefficients) == shape.ndim):
        raise ValueError("bounds, orders and coefficient functions must match the grid dimension")
    if dt <= 0:
        raise ValueError("time step must be positive")
    pts = grid_points(lower, upper, shape.dims)
    terms = []
    for i, (lo, hi, alpha, fn, M) in enumerate(zip(lower, upper, orders, coefficients, shape.dims)):
        if not hi > lo:
            raise ValueError(f"empty interval along dimension {i}")
        h = (hi - lo) / (M + 1)
        values = np.broadcast_to(np.asarray(fn(*pts), dtype=float), (shape.size,)).copy()
        bad = np.flatnonzero(~(values > 0))
        if bad.size:
            k = int(bad[0])
            point = tuple(float(p[k]) for p in pts)
            raise ValueError(f"coefficient {i} is not positive at grid point {point}: {values[k]}")
        seq = make_coeffs(scheme, alpha, M)
        terms.append(AxisTerm(dt / h**alpha, ToeplitzSymbol(seq.values), values, order=alpha))
    return SfdeOperator(shape, terms)


def apply(op: SfdeOperator, v) -> np.ndarray:
    return op.matvec(v)


def kron_axis_dense(shape: GridShape, axis: int, block: np.ndarray) -> np.ndarray:
    """Dense ``I_{after} (x) block (x) I_{before}`` for first-dimension-fastest ordering."""
    before = int(np.prod(shape.dims[:axis]))
    after = int(np.prod(shape.dims[axis + 1 :]))
    return np.kron(np.eye(after), np.kron(block, np.eye(before)))


def materialize_dense(op: SfdeOperator, limit: int = DENSE_LIMIT) -> np.ndarray:
    J = op.size
    if J > limit:
        raise ValueError(f"refusing to materialize a {J}x{J} dense matrix (limit {limit})")
    A = np.eye(J)
    for i, t in enumerate(op.terms):
        K = kron_axis_dense(op.shape, i, toeplitz_dense(t.symbol))
        A += t.eta * t.coef[:, None] * K
    return A


def symmetric_part_extreme_eigs(op: SfdeOperator) -> tuple[float, float, float]:
    """``(lambda_min(H(A)), lambda_max(H(A)), rho(S(A)))`` by dense eigensolves."""
    if op.size > EIG_LIMIT:
        raise ValueError(f"dense eigen-analysis limited to J <= {EIG_LIMIT}")
    A = materialize_dense(op)
    H = 0.5 * (A + A.T)
    S = 0.5 * (A - A.T)
    w = np.linalg.eigvalsh(H)
    # S is skew-symmetric, so i*S is Hermitian with real spectrum
    skew = np.linalg.eigvalsh(1j * S)
    return float(w[0]), float(w[-1]), float(np.max(np.abs(skew)))
