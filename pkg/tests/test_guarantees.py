import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import lambertw

from conftest import gaussian_model
from wrjump.guarantees import (BanachScaleParams, UnboundedHorizon, bounds_report, delta_theta,
                               horizon_T, operator_norm_bound, tau_theta)

UNIT = BanachScaleParams(1.0, 1.0)
OMEGA = float(lambertw(1.0).real)


def test_horizon_examples():
    assert horizon_T(1.0, 0.0, UNIT) == pytest.approx(0.25 * math.exp(-math.e), rel=1e-15)
    assert horizon_T(1.0, 0.0, UNIT) == pytest.approx(float(mpmath.e ** (-mpmath.e) / 4), rel=1e-15)
    assert horizon_T(1.5, 0.5, BanachScaleParams(2.0, 0.0)) == 1.0 / 8.0
    assert horizon_T(1.0, 0.0, BanachScaleParams(2.0, 1.0)) == pytest.approx(horizon_T(1.0, 0.0, UNIT) / 2)
    with pytest.raises(ValueError):
        horizon_T(0.0, 0.0, UNIT)


def test_delta_examples():
    assert delta_theta(0.0, UNIT) == pytest.approx(OMEGA, abs=1e-14)
    c = 2.5
    assert delta_theta(-math.log(c), BanachScaleParams(1.0, c)) == pytest.approx(OMEGA, abs=1e-14)
    # RHS = e
    assert delta_theta(-1.0, UNIT) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(UnboundedHorizon):
        delta_theta(0.0, BanachScaleParams(1.0, 0.0))


@given(st.floats(-20.0, 20.0), st.floats(1e-3, 1e3))
@settings(max_examples=100, deadline=None)
def test_delta_solves_equation(theta, c):
    d = delta_theta(theta, BanachScaleParams(1.0, c))
    assert d > 0
    assert d == pytest.approx(float(lambertw(math.exp(-theta) / c).real), rel=1e-13)
    lhs = mpmath.mpf(d) * mpmath.e ** mpmath.mpf(d)
    rhs = mpmath.e ** (-mpmath.mpf(theta)) / c
    assert abs(lhs / rhs - 1) < 1e-13


def test_delta_and_tau_decrease():
    thetas = np.linspace(-3, 6, 50)
    ds = [delta_theta(t, UNIT) for t in thetas]
    ts = [tau_theta(t, UNIT) for t in thetas]
    assert np.all(np.diff(ds) < 0) and np.all(np.diff(ts) < 0)


def test_tau_example_and_scan():
    tau = tau_theta(0.0, UNIT)
    assert tau == pytest.approx(OMEGA / 4 * math.exp(-1 / OMEGA), rel=1e-14)
    assert tau == pytest.approx(0.02432, abs=1e-5)
    grid = np.linspace(1e-6, 3.0, 300001)
    vals = np.array([horizon_T(t, 0.0, UNIT) for t in grid])
    assert abs(vals.max() - tau) < 1e-6
    assert abs(grid[vals.argmax()] - OMEGA) < 2 * (grid[1] - grid[0])
    assert np.all(vals <= tau * (1 + 1e-14))


@given(st.floats(-3.0, 3.0), st.floats(0.1, 5.0), st.floats(0.1, 5.0), st.floats(1e-3, 5.0))
@settings(max_examples=80, deadline=None)
def test_tau_is_supremum(theta, alpha, c, gap):
    p = BanachScaleParams(alpha, c)
    tau = tau_theta(theta, p)
    assert horizon_T(theta + gap, theta, p) <= tau * (1 + 1e-12)
    assert horizon_T(theta + delta_theta(theta, p), theta, p) == pytest.approx(tau, rel=1e-12)


def test_norm_bound():
    assert operator_norm_bound(1.0, 0.0, [(1.0, 0.0), (1.0, 0.0)]) == pytest.approx(4 / math.e)
    vals = [operator_norm_bound(0.0, -g, [(1.0, 1.0)]) for g in (1.0, 0.1, 0.01)]
    assert vals[0] < vals[1] < vals[2]
    pairs = [(1.0, 0.5), (0.3, 2.0)]
    ref = 4 / math.e * max(a * math.exp(m * math.exp(-0.5)) for a, m in pairs)
    assert operator_norm_bound(0.5, -0.5, pairs) == pytest.approx(ref)
    model = gaussian_model(a_mass=2.0, phi_mass=0.5)
    assert operator_norm_bound(0.0, -1.0, model) == pytest.approx(4 / math.e * 2 * math.exp(0.5 * math.exp(-1)))
    with pytest.raises(ValueError):
        operator_norm_bound(0.0, 0.0, model)


def test_params_from_model_and_report():
    model = gaussian_model(a_mass=2.0, phi_mass=0.5)
    p = BanachScaleParams.from_model(model)
    assert p.alpha == pytest.approx(2.0) and p.c == pytest.approx(0.5)
    rep = bounds_report(UNIT, 0.0, theta_prime=1.0, theta_dd=-1.0)
    assert rep["tau"] == pytest.approx(0.024315, abs=1e-6)
    assert rep["T"] == pytest.approx(horizon_T(1.0, 0.0, UNIT))
    free = bounds_report(BanachScaleParams(1.0, 0.0), 0.0, theta_prime=1.0)
    assert free["tau"] == "unbounded horizon" and free["T"] == 0.25
    with pytest.raises(ValueError):
        BanachScaleParams(0.0, 1.0)
