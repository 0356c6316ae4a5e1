import math

import mpmath
import numpy as np
import pytest

from errors import DomainError, QuadratureError
from mathcore import (
    dirichlet_heat,
    dirichlet_resolvent,
    erfc,
    erfc_bounds,
    erfcx,
    gauss_heat,
    quad_checked,
    smooth_cutoff,
    sticky_g,
)

mpmath.mp.dps = 40


def mp_sticky_g(t, x, gamma):
    t, x, gamma = mpmath.mpf(t), mpmath.mpf(x), mpmath.mpf(gamma)
    z = x / mpmath.sqrt(2 * t) + mpmath.sqrt(2 * t) / gamma
    return mpmath.exp(2 * x / gamma + 2 * t / gamma**2) * mpmath.erfc(z) / gamma


@pytest.mark.parametrize("x", [-3.0, -0.5, 0.0, 0.3, 1.0, 5.0, 26.0, 1e3])
def test_erfcx_matches_high_precision(x):
    expected = float(mpmath.exp(mpmath.mpf(x) ** 2) * mpmath.erfc(x))
    assert erfcx(x) == pytest.approx(expected, rel=1e-12)


def test_erfc_values():
    assert erfc(0.0) == 1.0
    assert erfc(1.0) == pytest.approx(float(mpmath.erfc(1)), rel=1e-15)
    np.testing.assert_allclose(erfc(np.array([0.5, 2.0])), [float(mpmath.erfc(0.5)), float(mpmath.erfc(2))])


def test_erfc_bounds_sandwich():
    xs = np.concatenate([[0.0], np.logspace(-6.0, math.log10(50.0), 400)])
    lower, upper = erfc_bounds(xs)
    values = erfc(xs)
    positive = values > 0
    assert np.all(lower[positive] < values[positive])
    assert np.all(values[positive] <= upper[positive] * (1 + 1e-14))


def test_erfc_bounds_tight_at_origin():
    lower, upper = erfc_bounds(0.0)
    assert upper == pytest.approx(1.0, rel=1e-15)
    assert lower == pytest.approx(2.0 / math.sqrt(2.0 * math.pi))


def test_erfc_bounds_reject_negative():
    with pytest.raises(DomainError):
        erfc_bounds(-1.0)


@pytest.mark.parametrize("t,x,gamma", [(1.0, 0.0, 1.0), (0.1, 0.5, 2.0), (10.0, 3.0, 0.3), (1e-4, 1e-3, 1.0)])
def test_sticky_g_matches_closed_form(t, x, gamma):
    assert sticky_g(t, x, gamma) == pytest.approx(float(mp_sticky_g(t, x, gamma)), rel=1e-12)


def test_sticky_g_no_overflow_far_out():
    value = sticky_g(1e6, 1e6, 1.0)
    assert math.isfinite(value)
    assert value >= 0.0
    assert sticky_g(1e6, 0.0, 1e-3) == pytest.approx(float(mp_sticky_g(1e6, 0.0, 1e-3)), rel=1e-10)


def test_gauss_heat_symmetric_and_normalised():
    assert gauss_heat(0.7, 0.2, 1.3) == gauss_heat(0.7, 1.3, 0.2)
    total, _ = quad_checked(lambda y: gauss_heat(0.7, 0.2, y), -math.inf, math.inf)
    assert total == pytest.approx(1.0, abs=1e-10)


def test_dirichlet_heat_vanishes_at_boundary():
    assert dirichlet_heat(1.0, 0.5, 0.0) == 0.0
    assert dirichlet_heat(1.0, 0.0, 0.5) == 0.0
    small = dirichlet_heat(1.0, 1e-9, 1e-9)
    assert small == pytest.approx(2e-18 / math.sqrt(2 * math.pi), rel=1e-6)


def test_dirichlet_resolvent_is_laplace_transform():
    lam, x, y = 0.8, 0.4, 1.1
    value, _ = quad_checked(lambda t: math.exp(-lam * t) * dirichlet_heat(t, x, y), 0.0, math.inf)
    assert dirichlet_resolvent(lam, x, y) == pytest.approx(value, rel=1e-8)


@pytest.mark.parametrize(
    "call",
    [
        lambda: gauss_heat(0.0, 0.0, 0.0),
        lambda: dirichlet_heat(1.0, -0.1, 0.0),
        lambda: sticky_g(1.0, 0.0, 0.0),
        lambda: sticky_g(float("nan"), 0.0, 1.0),
        lambda: dirichlet_resolvent(-1.0, 0.0, 0.0),
    ],
)
def test_domain_violations_raise(call):
    with pytest.raises(DomainError):
        call()


def test_scalar_in_scalar_out():
    assert isinstance(sticky_g(1.0, 0.5, 1.0), float)
    assert sticky_g(1.0, np.array([0.0, 0.5]), 1.0).shape == (2,)


def test_quad_checked_splits_at_breakpoints():
    value, err = quad_checked(lambda y: abs(y - 0.3), 0.0, 1.0, breakpoints=(0.3,))
    assert value == pytest.approx(0.5 * (0.3**2 + 0.7**2), abs=1e-14)
    assert err < 1e-10


def test_quad_checked_reports_failure():
    with pytest.raises(QuadratureError) as info:
        quad_checked(lambda y: 1.0 / y, 0.0, 1.0, limit=5)
    assert info.value.error_estimate > 0.0


def test_smooth_cutoff_shape():
    ys = np.linspace(0.0, 3.0, 301)
    chi = smooth_cutoff(ys, 1.0, 2.0)
    assert np.all(chi[ys <= 1.0] == 1.0)
    assert np.all(chi[ys >= 2.0] == 0.0)
    assert np.all(np.diff(chi) <= 0.0)
    # flat at both joins
    h = 1e-4
    assert abs(smooth_cutoff(1.0 + h) - 1.0) / h < 1e-6
    assert smooth_cutoff(2.0 - h) / h < 1e-6


def test_smooth_cutoff_rejects_bad_interval():
    with pytest.raises(DomainError):
        smooth_cutoff(0.5, 2.0, 1.0)
