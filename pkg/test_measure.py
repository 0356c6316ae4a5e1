import math

import numpy as np
import pytest
from pydantic import ValidationError

from errors import DegenerateMeasureError, DomainError
from measure import (
    ProductMeasureSpec,
    gaussian_tail_radius,
    integrate_mu,
    stationary_expectation,
    strata,
    wetting_tail_radius,
)
from models import custom_model, flat_model, gaussian_model


def ones(x):
    return np.ones(x.shape[0])


def at_origin(x):
    return np.all(x == 0.0, axis=-1).astype(float)


def test_strata_order_and_weights():
    parts = strata(ProductMeasureSpec(n=3, beta=0.5, R=1.0))
    assert len(parts) == 8
    assert [p.free for p in parts[:4]] == [(), (0,), (1,), (2,)]
    assert parts[0].weight == 0.125
    assert parts[-1].free == (0, 1, 2)
    assert parts[-1].weight == 1.0


def test_constant_integrand():
    assert integrate_mu(ones, ProductMeasureSpec(n=2, beta=2.0, R=1.0)) == pytest.approx(9.0, rel=1e-14)


def test_origin_indicator_picks_up_atoms():
    for beta in (0.3, 1.0, 2.5):
        assert integrate_mu(at_origin, ProductMeasureSpec(n=1, beta=beta, R=4.0)) == pytest.approx(beta)


def test_gaussian_integral():
    spec = ProductMeasureSpec(n=1, beta=1.0, R=gaussian_tail_radius(1.0, 1e-15))
    value = integrate_mu(lambda x: np.exp(-np.sum(x * x, axis=-1)), spec)
    assert value == pytest.approx(math.sqrt(math.pi) / 2 + 1, abs=1e-12)
    assert value == pytest.approx(1.8862269, abs=1e-7)


def test_threads_give_same_value():
    spec = ProductMeasureSpec(n=3, beta=0.7, R=3.0, resolution=16)
    f = lambda x: np.exp(-np.sum(x, axis=-1))  # noqa: E731
    assert integrate_mu(f, spec, max_workers=4) == integrate_mu(f, spec)


def test_stationary_atom_probability_gaussian():
    spec = ProductMeasureSpec(n=1, beta=1.0, R=gaussian_tail_radius(1.0, 1e-15))
    value = stationary_expectation(at_origin, gaussian_model(1), spec)
    assert value == pytest.approx(0.530165, abs=1e-6)


def test_stationary_atom_probability_flat():
    beta, R = 0.4, 3.0
    value = stationary_expectation(at_origin, flat_model(1), ProductMeasureSpec(n=1, beta=beta, R=R))
    assert value == pytest.approx(beta / (R + beta), rel=1e-12)


def test_resolution_refinement():
    R = gaussian_tail_radius(1.0, 1e-15)
    F = lambda x: np.sum(x, axis=-1)  # noqa: E731
    coarse = stationary_expectation(F, gaussian_model(2), ProductMeasureSpec(n=2, beta=1.0, R=R, resolution=32))
    fine = stationary_expectation(F, gaussian_model(2), ProductMeasureSpec(n=2, beta=1.0, R=R, resolution=64))
    assert coarse == pytest.approx(fine, abs=1e-10)


def test_dimension_limit():
    with pytest.raises(ValidationError):
        ProductMeasureSpec(n=13, beta=1.0, R=1.0)
    with pytest.raises(ValidationError):
        ProductMeasureSpec(n=2, beta=1.0, R=1.0, nodes=4)


def test_non_finite_integrand():
    with pytest.raises(DomainError):
        integrate_mu(lambda x: 1.0 / x[:, 0], ProductMeasureSpec(n=1, beta=1.0, R=1.0))


def test_dimension_mismatch():
    with pytest.raises(DomainError):
        stationary_expectation(ones, gaussian_model(2), ProductMeasureSpec(n=1, beta=1.0, R=1.0))


def test_degenerate_density():
    vanishing = custom_model(
        1,
        H=lambda x: np.full(x.shape[:-1], 1e6),
        gradH=lambda x: np.zeros(x.shape),
        laplacianDiagH=lambda x: np.zeros(x.shape),
    )
    with pytest.raises(DegenerateMeasureError):
        stationary_expectation(ones, vanishing, ProductMeasureSpec(n=1, beta=1.0, R=1.0))


def test_tail_radii():
    R = gaussian_tail_radius(1.0, 1e-12)
    assert math.erfc(R) == pytest.approx(1e-12, rel=1e-8)
    assert wetting_tail_radius(4, 1.0) > wetting_tail_radius(1, 1.0)
    with pytest.raises(DomainError):
        wetting_tail_radius(3, 0.0)
