"""Adaptive Gauss-Kronrod integrator and its log-domain companion."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from downcross.errors import QuadratureError
from downcross.quadrature import (
    integrate,
    kronrod_panel,
    log_integral_exp,
    panel_integrals,
    panel_points,
)


def test_panel_points_shape_and_range():
    pts = panel_points(np.array([0.0, 2.0]), np.array([1.0, 5.0]))
    assert pts.shape == (2, 15)
    assert np.all(pts[0] > 0.0) and np.all(pts[0] < 1.0)
    assert np.all(pts[1] > 2.0) and np.all(pts[1] < 5.0)
    assert np.all(np.diff(pts, axis=1) > 0.0)


def test_kronrod_panel_exact_on_low_degree_polynomial():
    # 15-point Kronrod integrates polynomials up to degree 22 exactly.
    value, err = kronrod_panel(lambda x: x**7 - 3.0 * x**4 + x, -1.0, 2.0)
    exact = (2.0**8 - 1.0) / 8.0 - 3.0 * (2.0**5 + 1.0) / 5.0 + (4.0 - 1.0) / 2.0
    assert value == pytest.approx(exact, rel=1e-14)
    assert err < 1e-10


def test_integrate_sin_closed_form():
    value = integrate(np.sin, 0.0, math.pi)
    assert value == pytest.approx(2.0, rel=1e-12)


def test_integrate_empty_and_reversed_intervals():
    assert integrate(np.exp, 1.5, 1.5) == 0.0
    fwd = integrate(np.exp, 0.0, 1.0)
    rev = integrate(np.exp, 1.0, 0.0)
    assert rev == pytest.approx(-fwd, rel=1e-14)
    assert fwd == pytest.approx(math.e - 1.0, rel=1e-12)


def test_integrate_resolves_narrow_peak():
    # A Lorentzian of width 1e-4 inside a length-2 interval: its tails
    # give the first panel a real error signal, and refinement must then
    # dig three orders of magnitude down to the core.
    w = 1e-4
    x0 = 0.654321

    def spike(x):
        return w**2 / ((x - x0) ** 2 + w**2)

    value = integrate(spike, -1.0, 1.0)
    exact = w * (math.atan((1.0 - x0) / w) + math.atan((1.0 + x0) / w))
    assert value == pytest.approx(exact, rel=1e-9)


def test_integrate_panel_budget_exhaustion_raises():
    def jagged(x):
        return np.sin(1.0 / np.maximum(np.abs(x), 1e-300))

    with pytest.raises(QuadratureError):
        integrate(jagged, -1.0, 1.0, abs_tol=1e-300, rel_tol=1e-300, max_panels=8)


def test_integrate_rejects_non_finite_values():
    def bad(x):
        out = np.asarray(1.0 / x)
        return out

    with np.errstate(all="ignore"), pytest.raises(QuadratureError):
        integrate(bad, -1.0, 1.0)


def test_integrate_rejects_non_finite_bounds():
    with np.errstate(all="ignore"), pytest.raises(QuadratureError):
        integrate(np.exp, 0.0, math.inf)


@given(
    st.floats(-3.0, 3.0),
    st.floats(-3.0, 3.0),
    st.floats(-3.0, 3.0),
)
def test_integrate_is_additive_over_subdivision(a, m, b):
    whole = integrate(np.cos, a, b)
    split = integrate(np.cos, a, m) + integrate(np.cos, m, b)
    assert split == pytest.approx(whole, abs=1e-10)


def test_log_integral_exp_matches_direct_log_on_moderate_slope():
    # integral of e^{2x} over [0, 1] is (e^2 - 1)/2.
    value = log_integral_exp(lambda x: 2.0 * x, 0.0, 1.0)
    assert value == pytest.approx(math.log((math.e**2 - 1.0) / 2.0), rel=1e-12)


def test_log_integral_exp_survives_large_negative_exponents():
    # integral of e^{-1000 x} over [0, 1] = (1 - e^{-1000})/1000; the
    # direct integral underflows nowhere near as badly as the integrand.
    value = log_integral_exp(lambda x: -1000.0 * x, 0.0, 1.0)
    assert value == pytest.approx(math.log1p(-math.exp(-1000.0)) - math.log(1000.0),
                                  rel=1e-10)


def test_log_integral_exp_survives_large_positive_exponents():
    # integral of e^{1000 x} over [0, 1] = (e^1000 - 1)/1000 overflows a
    # float; its log is 1000 - log(1000) + log1p(-e^-1000).
    value = log_integral_exp(lambda x: 1000.0 * x, 0.0, 1.0)
    exact = 1000.0 - math.log(1000.0) + math.log1p(-math.exp(-1000.0))
    assert value == pytest.approx(exact, rel=1e-12)


def test_log_integral_exp_constant_exponent_offsets_by_log_length():
    value = log_integral_exp(lambda x: np.full_like(x, -5.0), 2.0, 6.0)
    assert value == pytest.approx(-5.0 + math.log(4.0), rel=1e-12)


def test_log_integral_exp_requires_increasing_bounds():
    with pytest.raises(QuadratureError):
        log_integral_exp(lambda x: x, 1.0, 1.0)
    with pytest.raises(QuadratureError):
        log_integral_exp(lambda x: x, 2.0, 1.0)


def test_panel_integrals_error_estimate_is_zero_for_gauss_exact():
    a = np.array([0.0])
    b = np.array([1.0])
    pts = panel_points(a, b)
    fv = pts**3
    values, errors = panel_integrals(fv, 0.5 * (b - a))
    assert values[0] == pytest.approx(0.25, rel=1e-14)
    assert errors[0] < 1e-14
