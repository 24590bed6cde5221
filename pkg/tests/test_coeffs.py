from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boussitopo.coeffs import (
    REFERENCE_ROOT,
    SIGMA_DEFAULT,
    ConvergenceError,
    SmallCoeffs,
    coeffs_small,
    coeffs_strong,
    epsilon_positivity_bounds,
    is_symmetric_small,
    newton,
    solve_symmetric_strong,
    symmetry_residual_strong,
)

# refined symmetric root, frozen from the Newton solver
ROOT = (0.6318259802879013, -0.34160264922597267, -2.820858505154595, -3.1157004446454875)

unit = st.floats(0, 1)
real = st.floats(-5, 5)


def test_default_symmetric_member_is_exact():
    assert SIGMA_DEFAULT.a == (Fraction(1, 12),) * 4
    assert is_symmetric_small(SIGMA_DEFAULT)


def test_b1_member():
    c = SmallCoeffs(Fraction(1), Fraction(1), Fraction(0))
    assert c.a == (0, 0, Fraction(1, 3), 0)
    assert not is_symmetric_small(c)


def test_theta_one_kills_a1_a2():
    c = coeffs_small(1.0, 0.3, 0.7)
    assert c.a1 == 0 and c.a2 == 0


def test_non_symmetric_example():
    c = coeffs_small(0.0, 0.0, 1.0)
    assert c.a1 == pytest.approx(0.5) and c.a3 == 0
    assert not is_symmetric_small(c)


def test_theta_range_rejected():
    with pytest.raises(ValueError):
        coeffs_small(1.2, 0, 0)
    with pytest.raises(ValueError):
        coeffs_strong(-0.1, 0, 0, 0)


@given(theta=unit, lam=real, mu=real)
def test_small_pair_sums_independent_of_weights(theta, lam, mu):
    c = coeffs_small(theta, lam, mu)
    assert c.a1 + c.a2 == pytest.approx((1 - theta**2) / 2, abs=1e-9)
    assert c.a3 + c.a4 == pytest.approx(theta**2 / 2 - 1 / 6, abs=1e-9)


@given(theta=unit, l1=real, l2=real, mu=real, l1b=real, l2b=real, mub=real)
def test_c3_c4_depend_on_theta_only(theta, l1, l2, mu, l1b, l2b, mub):
    a, b = coeffs_strong(theta, l1, l2, mu), coeffs_strong(theta, l1b, l2b, mub)
    assert a.c[2:] == b.c[2:]


def test_strong_theta_one():
    c = coeffs_strong(1.0, 0.4, -2.0, 0.3)
    assert c.b == (0.0, 0.0, 0.0, 0.0)
    assert c.c[2] == pytest.approx(1 / 3) and c.c[3] == pytest.approx(0.5)


def test_strong_mu_zero():
    c = coeffs_strong(0.5, 1.0, 1.0, 0.0)
    assert c.c[0] == 0 and c.c[1] == 0


def test_strong_published_root_values():
    c = coeffs_strong(*REFERENCE_ROOT)
    assert c.b[0] == pytest.approx(-0.2052, abs=2e-4)
    assert c.c[0] == pytest.approx(-0.2053, abs=2e-4)
    assert np.max(np.abs(symmetry_residual_strong(*REFERENCE_ROOT))) <= 2e-3


def test_residual_at_theta_one():
    assert np.allclose(symmetry_residual_strong(1.0, 0, 0, 0), [0, 0, -1 / 3, 0.5])


def test_root_from_published_guess():
    root = solve_symmetric_strong(REFERENCE_ROOT)
    assert np.allclose(root.coeffs.params, ROOT, atol=1e-10)
    assert root.residual <= 1e-12
    assert np.max(np.abs(symmetry_residual_strong(*root.coeffs.params))) <= 1e-12


@pytest.mark.parametrize("guess", [(0.5, 0, 0, 0), (0.2, 0, 0, 0), (0.65, 0, 0, 0)])
def test_far_guesses_reach_the_root(guess):
    root = solve_symmetric_strong(guess)
    assert np.allclose(root.coeffs.params, ROOT, atol=1e-8)
    assert root.residual <= 1e-12


def test_theta_one_guess_is_not_a_fake_root():
    with pytest.raises(ConvergenceError):
        solve_symmetric_strong((1.0, 0, 0, 0))


def test_out_of_range_root_is_flagged():
    with pytest.raises(ValueError, match="outside"):
        solve_symmetric_strong((0.9, 1, 1, 1))


def test_root_selection_prefers_published_neighbour():
    root = solve_symmetric_strong((0.9, 1, 1, 1), extra_guesses=[(0.5, 0, 0, 0)])
    assert np.allclose(root.coeffs.params, ROOT, atol=1e-8)


def test_newton_scalar():
    x, res, it = newton(lambda v: np.array([v[0] ** 2 - 2]), [1.0])
    assert x[0] == pytest.approx(np.sqrt(2), abs=1e-12)
    with pytest.raises(ConvergenceError):
        newton(lambda v: np.array([v[0] ** 2 + 1]), [1.0], max_iter=20)


def test_positivity_bounds():
    assert epsilon_positivity_bounds(*ROOT, 0.0)[:2] == (np.inf, np.inf)
    b = epsilon_positivity_bounds(*REFERENCE_ROOT, 1.0)
    assert b.velocity == pytest.approx(2 * 1.6318 * 1.3416 / (0.3682 * 3.8209**2), rel=1e-12)
    assert b.velocity == pytest.approx(0.8146, abs=1e-4)
    assert b.elevation_applicable
    fixed = epsilon_positivity_bounds(*ROOT, 1.0)
    assert fixed.velocity == pytest.approx(0.8146155514473987, rel=1e-12)
    assert fixed.elevation == pytest.approx(0.397059259871527, rel=1e-12)


def test_positivity_elevation_inapplicable():
    b = epsilon_positivity_bounds(0.5, 0, 0, 0, 1.0)
    assert not b.elevation_applicable and np.isnan(b.elevation)
    with pytest.raises(ValueError):
        epsilon_positivity_bounds(0.5, 0, 0, 0, -1.0)


@given(g=st.floats(0.1, 10))
@settings(max_examples=20)
def test_positivity_bounds_scale_inverse_square(g):
    b1 = epsilon_positivity_bounds(*ROOT, 1.0)
    bg = epsilon_positivity_bounds(*ROOT, g)
    assert bg.velocity == pytest.approx(b1.velocity / g**2, rel=1e-12)
    assert bg.elevation == pytest.approx(b1.elevation / g**2, rel=1e-12)
