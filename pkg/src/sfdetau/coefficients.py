"""Coefficient sequences for discretized Riesz fractional derivatives.

Each scheme produces numbers ``s_k`` such that the discrete operator along one
axis is ``-(1/h**gamma) * T`` with ``T`` the symmetric Toeplitz matrix whose
first column is ``s_0, s_1, ..., s_{M-1}``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Scheme",
    "CoefficientSequence",
    "PropertyReport",
    "gamma_function",
    "centered_difference_coeffs",
    "shifted_grunwald_coeffs",
    "cubic_spline_coeffs",
    "make_coeffs",
    "validate_properties",
]


class Scheme(str, enum.Enum):
    CENTERED_DIFFERENCE = "centered"
    SHIFTED_GRUNWALD = "grunwald"
    CUBIC_SPLINE = "spline"


@dataclass(frozen=True)
class CoefficientSequence:
    scheme: Scheme
    gamma: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("coefficient sequence must be a non-empty 1-D array")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    def dgamma_norm(self) -> float:
        """Finite-prefix proxy of ``sup_k |s_k| (1+k)**(1+gamma)``."""
        k = np.arange(self.values.size)
        return float(np.max(np.abs(self.values) * (1.0 + k) ** (1.0 + self.gamma)))


def gamma_function(x: float) -> float:
    """Gamma function for positive finite arguments."""
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise ValueError(f"gamma_function requires a positive finite argument, got {x!r}")
    return math.gamma(x)


def _check_order(gamma: float, count: int) -> None:
    if not (1.0 < gamma < 2.0):
        raise ValueError(f"fractional order must lie in the open interval (1, 2), got {gamma!r}")
    if int(count) < 1:
        raise ValueError(f"count must be a positive integer, got {count!r}")


def centered_difference_coeffs(gamma: float, count: int) -> CoefficientSequence:
    """Fractional centered-difference weights.

    ``s_0 = Gamma(gamma+1) / Gamma(gamma/2+1)**2`` and
    ``s_{k+1} = (1 - (gamma+1)/(gamma/2+k+1)) s_k``.
    """
    _check_order(gamma, count)
    k = np.arange(count - 1, dtype=float)
    ratios = 1.0 - (gamma + 1.0) / (gamma / 2.0 + k + 1.0)
    s0 = gamma_function(gamma + 1.0) / gamma_function(gamma / 2.0 + 1.0) ** 2
    values = s0 * np.concatenate(([1.0], np.cumprod(ratios)))
    return CoefficientSequence(Scheme.CENTERED_DIFFERENCE, gamma, values)


def _grunwald_weights(gamma: float, count: int) -> np.ndarray:
    # g_0 = -1, g_{k+1} = (1 - (gamma+1)/(k+1)) g_k
    k = np.arange(count - 1, dtype=float)
    ratios = 1.0 - (gamma + 1.0) / (k + 1.0)
    return -np.concatenate(([1.0], np.cumprod(ratios)))


def shifted_grunwald_coeffs(gamma: float, count: int) -> CoefficientSequence:
    """Symmetrized shifted Grunwald weights scaled by ``-1/(2 cos(gamma pi/2))``."""
    _check_order(gamma, count)
    g = _grunwald_weights(gamma, count + 2)
    w = np.empty(count)
    w[0] = 2.0 * g[1]
    if count > 1:
        w[1] = g[0] + g[2]
        w[2:] = g[3 : count + 1]
    q = -1.0 / (2.0 * math.cos(gamma * math.pi / 2.0))
    return CoefficientSequence(Scheme.SHIFTED_GRUNWALD, gamma, q * w)


# Past this index the fourth difference below loses all significant digits to
# cancellation, so it is summed from its binomial series instead.
_SPLINE_SERIES_START = 16
_SPLINE_SERIES_TERMS = 60


def _fourth_difference_series(x: np.ndarray, e: float) -> np.ndarray:
    """``sum_j (-1)**(4-j) C(4,j) (x+j)**e`` for ``x > 4``.

    Expanding ``(1 + j/x)**e`` binomially leaves
    ``x**e sum_{n>=4} C(e,n) 4! S(n,4) x**(-n)`` with ``S`` the Stirling
    numbers of the second kind.
    """
    total = np.zeros_like(x)
    binom = 1.0
    inv = 1.0 / x
    power = np.ones_like(x)
    for n in range(1, _SPLINE_SERIES_TERMS + 1):
        binom *= (e - n + 1) / n
        power = power * inv
        if n >= 4:
            surj = 4**n - 4 * 3**n + 6 * 2**n - 4  # 4! S(n, 4), exact integer
            total += binom * float(surj) * power
    return x**e * total


def _spline_weights(gamma: float, count: int) -> np.ndarray:
    e = 3.0 - gamma
    p = np.empty(count)
    p[0] = -1.0
    if count > 1:
        p[1] = 4.0 - 2.0**e
    if count > 2:
        p[2] = -(3.0**e) + 4.0 * 2.0**e - 6.0
    if count > 3:
        stop = min(count, _SPLINE_SERIES_START)
        k = np.arange(3, stop, dtype=float)
        p[3:stop] = -((k + 1) ** e) + 4 * k**e - 6 * (k - 1) ** e + 4 * (k - 2) ** e - (k - 3) ** e
    if count > _SPLINE_SERIES_START:
        k = np.arange(_SPLINE_SERIES_START, count, dtype=float)
        p[_SPLINE_SERIES_START:] = -_fourth_difference_series(k - 3.0, e)
    return p


def cubic_spline_coeffs(gamma: float, count: int) -> CoefficientSequence:
    """Weighted (cubic-spline based) weights scaled by
    ``-1/(2 cos(gamma pi/2) Gamma(4-gamma))``."""
    _check_order(gamma, count)
    p = _spline_weights(gamma, count + 2)
    w = np.empty(count)
    w[0] = 2.0 * p[1]
    if count > 1:
        w[1] = p[0] + p[2]
        w[2:] = p[3 : count + 1]
    nu = -1.0 / (2.0 * math.cos(gamma * math.pi / 2.0) * gamma_function(4.0 - gamma))
    return CoefficientSequence(Scheme.CUBIC_SPLINE, gamma, nu * w)


_BUILDERS = {
    Scheme.CENTERED_DIFFERENCE: centered_difference_coeffs,
    Scheme.SHIFTED_GRUNWALD: shifted_grunwald_coeffs,
    Scheme.CUBIC_SPLINE: cubic_spline_coeffs,
}


def make_coeffs(scheme, gamma: float, count: int) -> CoefficientSequence:
    return _BUILDERS[Scheme(scheme)](gamma, count)


@dataclass
class PropertyCheck:
    name: str
    passed: bool
    first_failure: int | None = None
    value: float | None = None

    def as_dict(self):
        return {
            "name": self.name,
            "passed": self.passed,
            "first_failure": self.first_failure,
            "value": self.value,
        }


@dataclass
class PropertyReport:
    scheme: str
    gamma: float
    length: int
    checks: list[PropertyCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> PropertyCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self):
        return {
            "scheme": self.scheme,
            "gamma": self.gamma,
            "length": self.length,
            "passed": self.passed,
            "checks": [c.as_dict() for c in self.checks],
        }


def _first(mask: np.ndarray, offset: int = 0) -> int | None:
    idx = np.flatnonzero(mask)
    return int(idx[0]) + offset if idx.size else None


def validate_properties(seq: CoefficientSequence, decay_bound: float = 1e6) -> PropertyReport:
    """Check the structural properties on the available prefix.

    Checks, with the index of the first counterexample when one exists:

    * ``decay`` -- ``max_k |s_k| (1+k)**(1+gamma)`` finite and below ``decay_bound``
    * ``sign`` -- ``s_0 > 0`` and ``s_k <= 0`` for ``k >= 1``
    * ``partial_sums`` -- ``(m+1)**gamma (s_0 + 2 sum_{k=1}^{m-1} s_k) > 0`` for
      ``1 <= m <= K``; ``value`` holds the minimum over ``m``
    * ``monotone`` -- ``s_k <= s_{k+1}`` for ``k >= 1``
    """
    s = seq.values
    gamma = seq.gamma
    K = s.size
    k = np.arange(K)

    weighted = np.abs(s) * (1.0 + k) ** (1.0 + gamma)
    bad = ~np.isfinite(weighted) | (weighted > decay_bound)
    decay = PropertyCheck("decay", not bad.any(), _first(bad), float(np.max(weighted)))

    sign_bad = np.zeros(K, dtype=bool)
    sign_bad[0] = not s[0] > 0
    sign_bad[1:] = s[1:] > 0
    sign = PropertyCheck("sign", not sign_bad.any(), _first(sign_bad))

    # partial[m-1] = s_0 + 2 sum_{k=1}^{m-1} s_k for m = 1..K
    partial = s[0] + 2.0 * np.concatenate(([0.0], np.cumsum(s[1:])))
    m = np.arange(1, K + 1)
    scaled = (m + 1.0) ** gamma * partial
    psum_bad = ~(scaled > 0)
    partial_sums = PropertyCheck(
        "partial_sums", not psum_bad.any(), _first(psum_bad, 1), float(np.min(scaled))
    )

    mono_bad = s[1:-1] > s[2:]
    monotone = PropertyCheck("monotone", not mono_bad.any(), _first(mono_bad, 1))

    return PropertyReport(seq.scheme.value, gamma, K, [decay, sign, partial_sums, monotone])
