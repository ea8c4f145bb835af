import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy.special import lambertw

from conftest import gaussian_model
from wrjump.kernels import GridKernel, GridSpec, KernelSpec
from wrjump.kinetic import DensityPair, kinetic_rhs
from wrjump.model import ModelParams
from wrjump.stationary import (birth_death_map, classify_product, classify_stability,
                               constant_solutions, critical_wavenumber, ctilde_for, dispersion_growth,
                               frechet_apply, mode_matrix, perturbation_map, product_hat,
                               stationary_residual, symmetric_roots)

OMEGA = float(lambertw(1.0).real)
GRID = GridSpec(1, 8 * math.pi, 256)


def test_symmetric_root_matches_lambert_w():
    for a in (0.1, 1.0, math.e, 3.0, 10.0, 50.0):
        xs = symmetric_roots(a)[0][0]
        assert xs == pytest.approx(float(lambertw(a).real), rel=1e-12)
    assert symmetric_roots(1.0) == [pytest.approx((OMEGA, OMEGA), rel=1e-12)]
    (x, y), = symmetric_roots(math.e)
    assert x == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("a,count", [(1, 1), (2, 1), (2.5, 1), (3, 3), (4, 3), (6, 3)])
def test_bifurcation_count(a, count):
    roots = symmetric_roots(a)
    assert len(roots) == count
    for x, y in roots:
        assert abs(x * math.exp(y) - a) < 1e-10 * a
        assert abs(y * math.exp(x) - a) < 1e-10 * a


def test_a3_roots_and_products():
    roots = symmetric_roots(3.0)
    (xs, _), (x1, x3), (m1, m3) = roots
    assert xs == pytest.approx(1.04991, abs=1e-5)
    assert x1 == pytest.approx(0.4084, abs=1e-3) and x3 == pytest.approx(1.9942, abs=1e-3)
    assert (m1, m3) == (x3, x1)
    assert x1 * x3 < 1 < xs * xs


@given(st.floats(2.75, 40.0))
@settings(max_examples=40, deadline=None)
def test_asymmetric_pair_brackets_symmetric_root(a):
    roots = symmetric_roots(a)
    assume(len(roots) == 3)
    xs = roots[0][0]
    x1, x3 = roots[1]
    assert x1 < xs < x3
    assert x1 * x3 < 1 < xs * xs


def test_nonpositive_a_rejected():
    with pytest.raises(ValueError):
        symmetric_roots(0.0)


@pytest.mark.parametrize("a", [1.0, 2.0, 2.5, 3.0, 4.0, 6.0])
def test_constant_solutions_match_symmetric_roots(a):
    model = gaussian_model()
    pts = constant_solutions(a, a, model)
    roots = sorted(symmetric_roots(a), key=lambda r: r[1])
    assert len(pts) == len(roots)
    for pt, (x, y) in zip(pts, roots):
        assert pt.C0 == pytest.approx(x, abs=1e-10) and pt.C1 == pytest.approx(y, abs=1e-10)
    if len(pts) == 3:
        assert [p.classification for p in pts] == ["stable", "unstable", "stable"]


@given(st.floats(0.05, 8.0), st.floats(0.05, 8.0), st.floats(0.0, 3.0), st.floats(0.0, 3.0))
@settings(max_examples=60, deadline=None)
def test_constant_solutions_satisfy_consistency(ct0, ct1, m0, m1):
    phi0 = KernelSpec.with_mass("tophat", m0, 1.0, 1) if m0 else KernelSpec.zero()
    phi1 = KernelSpec.with_mass("gaussian", m1, 1.0, 1) if m1 else KernelSpec.zero("gaussian")
    a = KernelSpec.with_mass("gaussian", 1.0, 1.0, 1)
    model = ModelParams(1, a, a, phi0, phi1)
    pts = constant_solutions(ct0, ct1, model)
    assert len(pts) >= 1
    for p in pts:
        back = ctilde_for(p.C0, p.C1, model)
        assert back[0] == pytest.approx(ct0, rel=1e-10) and back[1] == pytest.approx(ct1, rel=1e-10)
        assert p.classification == classify_product(p.product)


def test_decoupled_case():
    a = KernelSpec.with_mass("gaussian", 1.0, 1.0, 1)
    model = ModelParams(1, a, a, KernelSpec.zero(), KernelSpec.with_mass("gaussian", 1.0, 1.0, 1))
    (pt,) = constant_solutions(2.0, 1.5, model)
    assert pt.C0 == pytest.approx(2.0) and pt.C1 == pytest.approx(1.5 * math.exp(-2.0), rel=1e-10)
    assert pt.classification == "stable" and pt.product == 0


def test_classification_thresholds(model):
    assert classify_stability(0, 0, model) == ("stable", 0)
    assert classify_stability(2, 2, model)[0] == "unstable"
    assert classify_product(1 + 5e-10) == "marginal"
    assert classify_stability(1.0, 1.0, model)[0] == "marginal"


def test_critical_wavenumber_gaussian(model):
    p = critical_wavenumber(2.0, 2.0, model)
    assert p == pytest.approx(math.sqrt(math.log(4)), abs=1e-10)
    assert critical_wavenumber(0.9, 1.0, model) is None


def test_critical_wavenumber_tophat():
    a = KernelSpec.with_mass("gaussian", 1.0, 1.0, 1)
    phi = KernelSpec.with_mass("tophat", 1.0, 1.0, 1)
    model = ModelParams(1, a, a, phi, phi)
    p = critical_wavenumber(1.5, 1.5, model)
    assert p < math.pi
    assert abs(product_hat(p, 1.5, 1.5, model) - 1) < 1e-10


def test_dispersion_special_points(model):
    assert dispersion_growth(0.0, 2.0, 2.0, model).growth_rates == (0.0, 0.0)
    p_star = critical_wavenumber(2.0, 2.0, model)
    top = dispersion_growth(p_star, 2.0, 2.0, model)
    assert abs(top.growth_rates[0]) < 1e-10
    assert abs(np.linalg.det(mode_matrix(p_star, 2.0, 2.0, model))) < 1e-10
    assert max(dispersion_growth(1.5, 2.0, 2.0, model).growth_rates) < 0
    assert dispersion_growth(0.5, 2.0, 2.0, model).growth_rates[0] > 0
    assert dispersion_growth(0.0, 2.0, 2.0, model).product_hat == pytest.approx(4.0)


@given(st.floats(0.0, 6.0), st.floats(0.0, 3.0), st.floats(0.0, 3.0))
@settings(max_examples=60, deadline=None)
def test_growth_rates_are_matrix_eigenvalues(p, C0, C1):
    model = gaussian_model(a_sigma=1.5)
    dp = dispersion_growth(p, C0, C1, model)
    ev = np.linalg.eigvals(mode_matrix(p, C0, C1, model))
    ref = sorted(ev.real, reverse=True)
    assert dp.growth_rates[0] >= dp.growth_rates[1]
    assert np.allclose(dp.growth_rates, ref, atol=1e-12)
    # positive growth iff the transform product exceeds one (A_i < 0 for p > 0)
    if p > 1e-3 and abs(dp.product_hat - 1) > 1e-6:
        assert (dp.growth_rates[0] > 0) == (dp.product_hat > 1)


@pytest.mark.parametrize("C", [(0.5, 0.5), (2.0, 2.0), (1.2, 2.3)])
def test_classification_matches_dispersion_scan(model, C):
    cls, _ = classify_stability(*C, model)
    tops = [dispersion_growth(p, *C, model).growth_rates[0] for p in np.linspace(1e-3, 8, 800)]
    assert (max(tops) > 0) == (cls == "unstable")


def test_mode_matrix_is_the_linearised_rhs():
    """Directional derivative of the discrete right-hand side along a cosine mode."""
    model = gaussian_model(a_mass=5.0, a_sigma=2.0)
    C0, C1 = 2.0, 2.0
    m = 4
    p = GRID.wavenumbers(m)
    wave = np.cos(p * GRID.coordinates()[0])
    base = DensityPair.constant(GRID, C0, C1)
    M = mode_matrix(p, C0, C1, model)
    h = 1e-6
    for vec in ((1.0, 0.0), (0.0, 1.0), (1.0, -1.0)):
        plus = DensityPair(GRID, C0 + h * vec[0] * wave, C1 + h * vec[1] * wave)
        minus = DensityPair(GRID, C0 - h * vec[0] * wave, C1 - h * vec[1] * wave)
        jvp = (kinetic_rhs(plus, model).as_array() - kinetic_rhs(minus, model).as_array()) / (2 * h)
        coef = jvp.reshape(2, -1) @ wave / (wave @ wave)
        assert np.allclose(coef, M @ np.array(vec), atol=1e-7)


def test_residuals(model):
    assert max(stationary_residual(DensityPair.constant(GRID, 1.3, 0.4), model)) < 1e-12
    rng = np.random.default_rng(0)
    noisy = DensityPair(GRID, 1 + rng.random(GRID.shape), 1 + rng.random(GRID.shape))
    assert min(stationary_residual(noisy, model)) > 0
    with pytest.raises(ValueError):
        stationary_residual(noisy, model, "birth_death_Ch1")


def test_birth_death_fixed_point_solves_full_system(model):
    """Iterate the birth-and-death map from a perturbed start; the limit solves the full system."""
    Ct = (1.0, 1.0)
    x = GRID.coordinates()[0]
    rho = DensityPair(GRID, 0.6 + 0.1 * np.cos(x / 4), 0.6 - 0.1 * np.cos(x / 4))
    for _ in range(200):
        rho = birth_death_map(rho, model, Ct)
    assert max(stationary_residual(rho, model, "birth_death_Ch1", Ct)) < 1e-13
    assert max(stationary_residual(rho, model)) < 1e-8


def test_damped_iteration_past_threshold():
    """Above the instability threshold a damped sweep may settle on a patterned solution."""
    model = gaussian_model(phi_mass=1.0, phi_sigma=1.0)
    a = 3.0
    x = GRID.coordinates()[0]
    xs = symmetric_roots(a)[0][0]
    rho = DensityPair(GRID, xs + 0.05 * np.cos(x / 4), xs - 0.05 * np.cos(x / 4))
    bd = math.inf
    for _ in range(4000):
        new = birth_death_map(rho, model, (a, a))
        rho = DensityPair.from_array(GRID, 0.5 * rho.as_array() + 0.5 * new.as_array())
        bd = max(stationary_residual(rho, model, "birth_death_Ch1", (a, a)))
        if bd < 1e-10:
            break
    # the patterned state is a saddle of the sweep; stop as soon as it is resolved
    assert bd < 1e-10 and np.ptp(rho.rho0) > 0.5
    assert max(stationary_residual(rho, model)) < 1e-6
    eps = DensityPair.from_array(GRID, rho.as_array() - xs)
    back = perturbation_map(eps, xs, xs, model)
    assert np.max(np.abs(back.as_array() - eps.as_array())) < 1e-6


def test_perturbation_map_linearisation(model):
    rng = np.random.default_rng(1)
    base = DensityPair(GRID, rng.standard_normal(GRID.shape), rng.standard_normal(GRID.shape))
    zero = DensityPair.constant(GRID, 0, 0)
    assert np.all(perturbation_map(zero, 1.0, 2.0, model).as_array() == 0)
    gaps = []
    for amp in (1e-3, 1e-4):
        e = DensityPair.from_array(GRID, amp * base.as_array())
        diff = perturbation_map(e, 1.0, 2.0, model).as_array() - frechet_apply(e, 1.0, 2.0, model).as_array()
        gaps.append(np.max(np.abs(diff)) / amp)
    assert gaps[1] < gaps[0] / 8


def test_frechet_on_cosine_and_mnm_eigenvector(model):
    x = GRID.coordinates()[0]
    k = 3
    wave = np.cos(GRID.wavenumbers(k) * x)
    f0 = GridKernel(model.phi0, GRID).discrete_fourier(k)
    f1 = GridKernel(model.phi1, GRID).discrete_fourier(k)
    out = frechet_apply(DensityPair(GRID, np.zeros(GRID.shape), wave), 1.5, 0.7, model)
    assert np.allclose(out.rho0, -1.5 * f0 * wave, atol=1e-12)
    assert np.all(out.rho1 == 0)
    # choose C so the discrete product is exactly one at mode k
    C0 = 1.5
    C1 = 1.0 / (C0 * f0 * f1)
    e = DensityPair(GRID, wave, -wave / (C0 * f0))
    assert np.allclose(frechet_apply(e, C0, C1, model).as_array(), e.as_array(), atol=1e-8)
