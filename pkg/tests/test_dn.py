import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boussitopo.dn import (
    DepthError,
    Regime,
    RegimeParams,
    StudyReport,
    assemble_coeffs,
    coercivity_c0,
    coercivity_check,
    dn_convergence_study,
    dn_expansion_small,
    dn_expansion_strong,
    exact_dn,
    fit_slope,
    wkb_profiles,
    wkb_residual,
)
from boussitopo.fields import Grid, StripGrid, fourier_grad

from conftest import band_limited


@pytest.fixture
def setup():
    g = Grid(1, 64)
    x = g.x[0]
    return g, x, np.cos(x), 0.1 * np.cos(x), 0.2 * np.cos(2 * x)


def flat_symbol(eps, k):
    return np.sqrt(eps) * k * np.tanh(np.sqrt(eps) * k)


def test_regime_params_validation():
    with pytest.raises(ValueError):
        RegimeParams(1.5)
    with pytest.raises(ValueError):
        RegimeParams(0.1, h_min=0)
    assert RegimeParams(0.1, Regime.SMALL).beta == 0.1
    assert RegimeParams(0.1, Regime.STRONG).beta == 1.0


def test_flat_small_matrix_is_diagonal():
    g = Grid(1, 16)
    c = assemble_coeffs(g.zeros(), g.zeros(), RegimeParams(0.1), StripGrid(g, 8))
    assert np.allclose(c.matrix[0, 0], 0.1)
    assert np.allclose(c.matrix[0, 1], 0.0) and np.allclose(c.matrix[1, 0], 0.0)
    assert np.allclose(c.matrix[1, 1], 1.0)


def test_strong_matrix_entry_at_bottom():
    g = Grid(1, 16)
    b = 0.3 * np.cos(g.x[0])
    c = assemble_coeffs(g.zeros(), b, RegimeParams(0.1, Regime.STRONG), StripGrid(g, 8))
    assert c.matrix[1, 1, 0, 0] == pytest.approx(1 / 0.7, abs=1e-12)
    # symmetric at every node
    assert np.array_equal(c.matrix[0, 1], c.matrix[1, 0])


def test_depth_violation_reports_node():
    g = Grid(1, 16)
    eta = g.zeros()
    eta[5] = -9.8
    with pytest.raises(DepthError, match=r"node \(5,\)"):
        assemble_coeffs(eta, g.zeros(), RegimeParams(0.1), StripGrid(g, 8))


def test_coercivity_constant_examples():
    assert coercivity_c0(0, 0, [0.3, 1], h_min=1, d=1) == pytest.approx(0.25)
    assert coercivity_c0(1, 1, [0.25, 1], h_min=0.5, d=1) == pytest.approx(0.5 / 4 * (1 / 1.5))


def test_coercivity_monte_carlo_small():
    violations, checked = coercivity_check(Grid(1, 32), samples=500, seed=3)
    assert checked == 500 and violations == 0


@pytest.mark.parametrize("k, nz, tol", [(1, 256, 1e-8), (2, 256, 1e-7), (4, 256, 1e-6)])
def test_flat_oracle(k, nz, tol):
    g = Grid(1, 64)
    f = np.cos(k * g.x[0])
    got = exact_dn(f, g.zeros(), g.zeros(), RegimeParams(0.04), StripGrid(g, nz))
    assert np.abs(got - flat_symbol(0.04, k) * f).max() <= tol


def test_flat_oracle_second_order_in_nz():
    g = Grid(1, 32)
    f = np.cos(3 * g.x[0])
    errs = []
    for nz in (32, 64, 128):
        got = exact_dn(f, g.zeros(), g.zeros(), RegimeParams(0.1), StripGrid(g, nz))
        errs.append(np.abs(got - flat_symbol(0.1, 3) * f).max())
    assert fit_slope([1 / 32, 1 / 64, 1 / 128], errs) >= 1.9


def test_constant_datum_gives_zero(setup):
    g, x, f, eta, b = setup
    for regime in Regime:
        out = exact_dn(np.full(g.shape, 2.0), eta, b, RegimeParams(0.1, regime), StripGrid(g, 32))
        assert np.abs(out).max() < 1e-9
        assert np.abs(dn_expansion_small(g, np.ones(g.shape), eta, b, 0.1)).max() < 1e-12
        assert np.abs(dn_expansion_strong(g, np.ones(g.shape), eta, b, 0.1)).max() < 1e-12


@pytest.mark.parametrize("k", [1, 2, 3])
def test_expansions_flat_taylor(k):
    g = Grid(1, 32)
    f = np.cos(k * g.x[0])
    expected = (0.1 * k**2 - 0.01 * k**4 / 3) * f
    for fn in (dn_expansion_small, dn_expansion_strong):
        assert np.allclose(fn(g, f, g.zeros(), g.zeros(), 0.1), expected, atol=1e-12)


@given(seed=st.integers(0, 2**31))
@settings(max_examples=20, deadline=None)
def test_regimes_agree_without_bottom(seed):
    g = Grid(1, 32)
    rng = np.random.default_rng(seed)
    f, eta = band_limited(g, rng), band_limited(g, rng)
    a = dn_expansion_small(g, f, eta, g.zeros(), 0.07)
    b = dn_expansion_strong(g, f, eta, g.zeros(), 0.07)
    assert np.abs(a - b).max() <= 1e-12 * (1 + np.abs(a).max())


def test_strong_constant_depth_reduction():
    g = Grid(1, 32)
    k, eps = 2, 0.05
    f = np.cos(k * g.x[0])
    b = np.full(g.shape, 0.5)
    first = dn_expansion_strong(g, f, g.zeros(), b, eps, order=1)
    assert np.allclose(first, eps * 0.5 * k**2 * f, atol=1e-12)
    # constant depth h: Z = sqrt(eps) k tanh(sqrt(eps) k h) = eps h k^2 - eps^2 h^3 k^4 / 3 + ...
    second = dn_expansion_strong(g, f, g.zeros(), b, eps)
    assert np.allclose(second, (eps * 0.5 * k**2 - eps**2 * 0.125 * k**4 / 3) * f, atol=1e-12)
    exact = exact_dn(f, g.zeros(), b, RegimeParams(eps, Regime.STRONG), StripGrid(g, 128))
    symbol = np.sqrt(eps) * k * np.tanh(np.sqrt(eps) * k * 0.5)
    assert np.allclose(exact, symbol * f, atol=1e-6)


@pytest.mark.parametrize("regime", list(Regime))
def test_wkb_boundary_values(setup, regime):
    g, x, f, eta, b = setup
    p = wkb_profiles(g, f, eta, b, regime)
    assert np.allclose(p.u0.value(0.0)[0], f)
    assert np.abs(p.u1.value(0.0)).max() < 1e-14
    assert np.abs(p.u2.value(0.0)).max() < 1e-14


def test_wkb_small_bottom_conditions(setup):
    g, x, f, eta, b = setup
    p = wkb_profiles(g, f, eta, b, Regime.SMALL)
    assert np.abs(p.u1.value(-1.0, deriv=1)).max() < 1e-14
    gbf = fourier_grad(g, b)[0] * fourier_grad(g, f)[0]
    assert np.abs(p.u2.value(-1.0, deriv=1)[0] - gbf).max() < 1e-12


@pytest.mark.parametrize("regime", list(Regime))
def test_wkb_residual_third_order(setup, regime):
    g, x, f, eta, b = setup
    strip = StripGrid(g, 16)
    eps_list = [0.1, 0.05, 0.025, 0.0125]
    inner, bottom = [], []
    for eps in eps_list:
        r, rb = wkb_residual(g, f, eta, b, RegimeParams(eps, regime), strip)
        inner.append(np.abs(r).max())
        bottom.append(np.abs(rb).max())
    assert fit_slope(eps_list, inner) == pytest.approx(3.0, abs=0.1)
    assert fit_slope(eps_list, bottom) >= 2.9


def test_convergence_study_flat_and_first_order():
    g = Grid(1, 32)
    f = np.cos(g.x[0])
    eps = [0.1, 0.05, 0.025, 0.0125]
    rep = dn_convergence_study(g, f, g.zeros(), g.zeros(), Regime.SMALL, eps, nz=96)
    assert rep.slope_l2 == pytest.approx(3.0, abs=0.2)
    first = dn_convergence_study(g, f, g.zeros(), g.zeros(), Regime.SMALL, eps, nz=96, order=1)
    assert first.slope_l2 == pytest.approx(2.0, abs=0.15)


def test_convergence_study_needs_four_decreasing():
    g = Grid(1, 16)
    with pytest.raises(ValueError):
        dn_convergence_study(g, g.zeros(), g.zeros(), g.zeros(), Regime.SMALL, [0.1, 0.05, 0.025])
    with pytest.raises(ValueError):
        dn_convergence_study(g, g.zeros(), g.zeros(), g.zeros(), Regime.SMALL, [0.1, 0.2, 0.05, 0.01])


def test_study_report_csv():
    rep = StudyReport([0.1, 0.05], [1e-3, 1.25e-4], [2e-3, 2.5e-4])
    text = rep.to_csv()
    assert text.splitlines()[0] == "epsilon,err_l2,err_max"
    assert text.splitlines()[-1] == "3.000000,3.000000"
    assert "\r" not in text


def test_fit_slope_exact():
    e = np.array([0.1, 0.05, 0.025])
    assert fit_slope(e, 7 * e**2) == pytest.approx(2.0)
