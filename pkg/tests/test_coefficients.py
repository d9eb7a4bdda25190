import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfdetau.coefficients import (
    CoefficientSequence,
    Scheme,
    centered_difference_coeffs,
    cubic_spline_coeffs,
    gamma_function,
    make_coeffs,
    shifted_grunwald_coeffs,
    validate_properties,
)

mpmath.mp.dps = 50
ORDERS = (1.1, 1.3, 1.5, 1.7, 1.9)

# Frozen values from 50-digit evaluations of the closed forms.
CD_S0_15 = 1.5737874653547949680604505874113181163116221798419
SPLINE_S0_15 = 1.2463732120272483676363342309759528059075553760046
SPLINE_S1_15 = -0.46939225500798843411527291099444065521982614064002


@pytest.mark.parametrize("x", [1.0, 3.0, 2.5, 0.1, 7.25, 1.75])
def test_gamma_matches_arbitrary_precision(x):
    ref = float(mpmath.gamma(mpmath.mpf(x)))
    assert gamma_function(x) == pytest.approx(ref, rel=1e-13)


def test_gamma_integer_values():
    assert gamma_function(1) == 1.0
    assert gamma_function(3) == 2.0


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_gamma_domain(bad):
    with pytest.raises(ValueError):
        gamma_function(bad)


def test_centered_first_value():
    assert centered_difference_coeffs(1.5, 1).values[0] == pytest.approx(CD_S0_15, rel=1e-14)


def test_centered_second_value_ratio():
    s = centered_difference_coeffs(1.5, 2).values
    assert s[1] == pytest.approx(-3.0 / 7.0 * s[0], rel=1e-14)


def test_centered_near_two_approaches_second_difference():
    s = centered_difference_coeffs(2.0 - 1e-9, 3).values
    np.testing.assert_allclose(s, [2.0, -1.0, 0.0], atol=1e-8)


@pytest.mark.parametrize("gamma", ORDERS)
def test_centered_matches_gamma_ratio_oracle(gamma):
    s = centered_difference_coeffs(gamma, 51).values
    g = mpmath.mpf(gamma)
    for k in range(51):
        ref = (-1) ** k * mpmath.gamma(g + 1) / (mpmath.gamma(g / 2 - k + 1) * mpmath.gamma(g / 2 + k + 1))
        assert s[k] == pytest.approx(float(ref), rel=1e-10)


def test_grunwald_first_value():
    assert shifted_grunwald_coeffs(1.5, 1).values[0] == pytest.approx(3.0 / math.sqrt(2.0), rel=1e-14)


@pytest.mark.parametrize("gamma", ORDERS)
def test_grunwald_matches_binomial_oracle(gamma):
    # g_k = (-1)^(k+1) C(gamma, k), the Grunwald weights with g_0 = -1
    s = shifted_grunwald_coeffs(gamma, 30).values
    g = [-((-1) ** k) * mpmath.binomial(gamma, k) for k in range(32)]
    q = -1 / (2 * mpmath.cos(gamma * mpmath.pi / 2))
    w = [2 * g[1], g[0] + g[2]] + [g[k + 1] for k in range(2, 30)]
    np.testing.assert_allclose(s, [float(q * x) for x in w], rtol=1e-12)


def test_grunwald_partial_sum_positive():
    s = shifted_grunwald_coeffs(1.5, 1000).values
    assert s[0] + 2 * s[1:].sum() > 0


def test_spline_first_values():
    s = cubic_spline_coeffs(1.5, 2).values
    assert s[0] == pytest.approx(SPLINE_S0_15, rel=1e-13)
    assert s[1] == pytest.approx(SPLINE_S1_15, rel=1e-13)
    assert s[1] < 0


@pytest.mark.parametrize("gamma", [1.1, 1.5, 1.9])
@pytest.mark.parametrize("k", [3, 10, 15, 16, 17, 100, 729, 3000])
def test_spline_weights_match_high_precision(gamma, k):
    e = 3 - mpmath.mpf(gamma)
    p = lambda j: -(j + 1) ** e + 4 * mpmath.mpf(j) ** e - 6 * mpmath.mpf(j - 1) ** e + 4 * mpmath.mpf(j - 2) ** e - mpmath.mpf(j - 3) ** e
    nu = -1 / (2 * mpmath.cos(gamma * mpmath.pi / 2) * mpmath.gamma(4 - mpmath.mpf(gamma)))
    s = cubic_spline_coeffs(gamma, k + 1).values
    assert s[k] == pytest.approx(float(nu * p(k + 1)), rel=1e-9)


@pytest.mark.parametrize("scheme", list(Scheme))
def test_first_value_positive(scheme):
    for g in ORDERS:
        assert make_coeffs(scheme, g, 1).values[0] > 0


@pytest.mark.parametrize("scheme", list(Scheme))
@pytest.mark.parametrize("gamma", [1.0, 2.0, 0.5, 2.5])
def test_order_domain(scheme, gamma):
    with pytest.raises(ValueError):
        make_coeffs(scheme, gamma, 4)


def test_count_domain():
    with pytest.raises(ValueError):
        centered_difference_coeffs(1.5, 0)


def test_sequence_is_read_only():
    seq = centered_difference_coeffs(1.5, 4)
    with pytest.raises(ValueError):
        seq.values[0] = 0.0


@pytest.mark.parametrize("scheme", list(Scheme))
@pytest.mark.parametrize("gamma", ORDERS)
def test_properties_hold_on_long_prefix(scheme, gamma):
    rep = validate_properties(make_coeffs(scheme, gamma, 4096))
    assert rep.passed, rep.as_dict()


@pytest.mark.parametrize("scheme", list(Scheme))
@pytest.mark.parametrize("gamma", ORDERS)
def test_partial_sum_floor(scheme, gamma):
    s = make_coeffs(scheme, gamma, 4096).values
    m = np.arange(1, 4097)
    partial = s[0] + 2 * np.concatenate(([0.0], np.cumsum(s[1:])))[m - 1]
    scaled = (m + 1) ** gamma * partial
    assert scaled.min() > 0
    assert scaled[64:].min() >= 0.5 * scaled[63]


def test_sign_counterexample():
    rep = validate_properties(CoefficientSequence(Scheme.CENTERED_DIFFERENCE, 1.5, [1.0, 0.1]))
    assert not rep["sign"].passed
    assert rep["sign"].first_failure == 1


def test_monotone_counterexample():
    rep = validate_properties(CoefficientSequence(Scheme.CENTERED_DIFFERENCE, 1.5, [1.0, -0.3, -0.5]))
    assert not rep["monotone"].passed
    assert rep["monotone"].first_failure == 1


def test_dgamma_norm_is_prefix_max():
    seq = centered_difference_coeffs(1.5, 100)
    k = np.arange(100)
    assert seq.dgamma_norm() == pytest.approx(np.max(np.abs(seq.values) * (1 + k) ** 2.5))


@settings(max_examples=40, deadline=None)
@given(gamma=st.floats(1.01, 1.99), count=st.integers(2, 300), scheme=st.sampled_from(list(Scheme)))
def test_prefix_consistency(gamma, count, scheme):
    long = make_coeffs(scheme, gamma, count).values
    short = make_coeffs(scheme, gamma, count // 2 + 1).values
    np.testing.assert_array_equal(long[: short.size], short)
    assert long[0] > 0 and np.all(long[1:] <= 0)
