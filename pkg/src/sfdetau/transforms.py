"""FFT-based kernels on tensor-product grids.

Grid vectors are flat arrays of length ``J = prod(dims)`` with the *first*
dimension varying fastest.  Internally a vector is viewed as a C-ordered
array of shape ``dims[::-1]``, so grid dimension ``i`` lives on array axis
``ndim - 1 - i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "GridShape",
    "ToeplitzSymbol",
    "dst1",
    "sine_matrix",
    "apply_sine_transform",
    "tau_eigenvalues",
    "tau_matrix_dense",
    "toeplitz_dense",
    "toeplitz_matvec",
    "ToeplitzKernel",
    "apply_along_axis",
]


@dataclass(frozen=True)
class GridShape:
    dims: tuple[int, ...]

    def __init__(self, dims: Sequence[int] | int):
        if isinstance(dims, (int, np.integer)):
            dims = (int(dims),)
        dims = tuple(int(d) for d in dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"grid dimensions must be positive integers, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    @property
    def array_shape(self) -> tuple[int, ...]:
        return self.dims[::-1]

    def array_axis(self, axis: int) -> int:
        if not 0 <= axis < self.ndim:
            raise ValueError(f"axis {axis} out of range for {self.ndim}-D grid")
        return self.ndim - 1 - axis

    def as_array(self, v) -> np.ndarray:
        v = np.asarray(v)
        if v.ndim != 1 or v.size != self.size:
            raise ValueError(f"expected a vector of length {self.size}, got shape {v.shape}")
        return v.reshape(self.array_shape)

    def index(self, multi_index: Sequence[int]) -> int:
        """Flat position of a zero-based multi-index (first dimension fastest)."""
        flat, stride = 0, 1
        for k, d in zip(multi_index, self.dims):
            flat += k * stride
            stride *= d
        return flat


@dataclass(frozen=True)
class ToeplitzSymbol:
    """First column ``t_0, ..., t_{M-1}`` of a symmetric Toeplitz matrix."""

    first_column: np.ndarray

    def __init__(self, first_column):
        col = np.array(first_column, dtype=float).ravel()
        if col.size < 1:
            raise ValueError("Toeplitz symbol needs at least one entry")
        col.setflags(write=False)
        object.__setattr__(self, "first_column", col)

    @property
    def size(self) -> int:
        return self.first_column.size


def _as_symbol(sym) -> ToeplitzSymbol:
    return sym if isinstance(sym, ToeplitzSymbol) else ToeplitzSymbol(sym)


def sine_matrix(M: int) -> np.ndarray:
    """Dense orthonormal DST-I matrix ``sqrt(2/(M+1)) sin(pi j k / (M+1))``."""
    j = np.arange(1, M + 1)
    return np.sqrt(2.0 / (M + 1)) * np.sin(np.pi * np.outer(j, j) / (M + 1))


def _dst1_axis(a: np.ndarray, axis: int) -> np.ndarray:
    a = np.moveaxis(a, axis, -1)
    M = a.shape[-1]
    n = 2 * (M + 1)
    ext = np.zeros(a.shape[:-1] + (n,), dtype=float)
    ext[..., 1 : M + 1] = a
    ext[..., M + 2 :] = -a[..., ::-1]
    spec = np.fft.rfft(ext, axis=-1)
    out = -spec.imag[..., 1 : M + 1] * (0.5 * np.sqrt(2.0 / (M + 1)))
    return np.moveaxis(out, -1, axis)


def dst1(v) -> np.ndarray:
    """Orthonormal type-I sine transform of a 1-D vector (self-inverse)."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("dst1 expects a non-empty 1-D vector")
    return _dst1_axis(v, 0)


def apply_sine_transform(shape: GridShape, v) -> np.ndarray:
    """Apply ``Q_{M_m} (x) ... (x) Q_{M_1}`` to a grid vector."""
    a = shape.as_array(np.asarray(v, dtype=float))
    for ax in range(a.ndim):
        if a.shape[ax] > 1:
            a = _dst1_axis(a, ax)
    return a.reshape(-1)


def tau_eigenvalues(sym) -> np.ndarray:
    """Eigenvalues of ``tau(T)`` in index order ``i = 1..M``:
    ``t_0 + 2 sum_j t_j cos(pi i j / (M+1))``."""
    t = _as_symbol(sym).first_column
    M = t.size
    c = np.zeros(2 * (M + 1))
    c[:M] = t
    re = np.fft.rfft(c).real[1 : M + 1]
    return 2.0 * re - t[0]


def toeplitz_dense(sym) -> np.ndarray:
    t = _as_symbol(sym).first_column
    M = t.size
    idx = np.abs(np.subtract.outer(np.arange(M), np.arange(M)))
    return t[idx]


def tau_matrix_dense(sym) -> np.ndarray:
    """Materialize ``tau(T) = T - H`` with ``H`` the Hankel correction whose first
    column is ``[t_2, ..., t_{M-1}, 0, 0]`` and last column ``[0, 0, t_{M-1}, ..., t_2]``."""
    t = _as_symbol(sym).first_column
    M = t.size
    T = toeplitz_dense(t)
    if M <= 2:
        return T
    # zero-based (i, j): H = t_{i+j+2} when i+j+2 <= M-1, t_{2M-i-j} when i+j >= M+1
    padded = np.concatenate((t, [0.0]))
    s = np.add.outer(np.arange(M), np.arange(M))
    H = np.zeros((M, M))
    upper = s + 2 <= M - 1
    H[upper] = padded[(s + 2)[upper]]
    lower = s >= M + 1
    H[lower] = padded[(2 * M - s)[lower]]
    return T - H


def _embedding_length(M: int) -> int:
    """Smallest power of two that can hold a circulant embedding (``>= 2M - 1``)."""
    return 1 << max(2 * M - 2, 1).bit_length()


class ToeplitzKernel:
    """Symmetric Toeplitz product via circulant embedding.

    The circulant column is ``[t_0, ..., t_{M-1}, 0, ..., 0, t_{M-1}, ..., t_1]``
    padded to a power-of-two length ``n >= 2M - 1``, which keeps every FFT on
    a fast size.  Its Fourier diagonal is computed once.
    """

    def __init__(self, sym):
        t = _as_symbol(sym).first_column
        M = t.size
        self.size = M
        self.n = _embedding_length(M)
        col = np.zeros(self.n)
        col[:M] = t
        if M > 1:
            col[-(M - 1):] = t[:0:-1]
        self._eig = np.fft.rfft(col)

    def __call__(self, a: np.ndarray, axis: int = -1) -> np.ndarray:
        M = self.size
        if a.shape[axis] != M:
            raise ValueError(f"Toeplitz kernel of size {M} applied to axis of length {a.shape[axis]}")
        spec = np.fft.rfft(a, n=self.n, axis=axis)
        shape = [1] * a.ndim
        shape[axis] = -1
        spec *= self._eig.reshape(shape)
        out = np.fft.irfft(spec, n=self.n, axis=axis)
        return np.take(out, np.arange(M), axis=axis)


def toeplitz_matvec(sym, v) -> np.ndarray:
    """``T v`` in ``O(M log M)``."""
    sym = _as_symbol(sym)
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size != sym.size:
        raise ValueError(f"expected a vector of length {sym.size}, got shape {v.shape}")
    return ToeplitzKernel(sym)(v)


def apply_along_axis(
    shape: GridShape, axis: int, kernel: Callable[[np.ndarray], np.ndarray] | np.ndarray, v
) -> np.ndarray:
    """Apply a 1-D linear map to every fiber along grid dimension ``axis``.

    ``kernel`` is either a dense ``(M, M)`` matrix or a callable taking
    ``(array, axis)`` such as :class:`ToeplitzKernel`.
    """
    a = shape.as_array(np.asarray(v, dtype=float))
    ax = shape.array_axis(axis)
    if isinstance(kernel, np.ndarray):
        if kernel.shape != (shape.dims[axis], shape.dims[axis]):
            raise ValueError("dense kernel does not match the axis length")
        out = np.moveaxis(np.tensordot(kernel, a, axes=([1], [ax])), 0, ax)
    else:
        out = kernel(a, ax)
    return np.ascontiguousarray(out).reshape(-1)
