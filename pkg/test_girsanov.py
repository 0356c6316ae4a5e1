import math

import numpy as np
import pytest

from errors import DomainError, MissingNoiseError
from girsanov import (
    gaussian_kato_closed_form,
    holder_bound,
    kato_potential,
    logweight_integral,
    logweight_ito,
    tail_bound_C,
    truncated_weight_probe,
    weight_moment,
    weighted_expectation,
)
from kernel import StickyParams
from models import bounded_drift_model, flat_model, gaussian_model
from paths import PathSample, _occupation, sample_exact_grid, sample_timechange, uniform_grid


def constant_path(value: float, horizon: float = 1.0, steps: int = 10, beta: float = 1.0) -> PathSample:
    grid = uniform_grid(horizon, steps)
    states = np.full((steps + 1, 1, 1), value)
    return PathSample(grid, states, _occupation(states, grid.steps), beta)


# =========================================================================
# Log weights
# =========================================================================
def test_flat_model_has_unit_weights(params, rng):
    path = sample_exact_grid(0.3, uniform_grid(1.0, 50), params, rng, n_paths=20)
    weight = logweight_ito(path, flat_model(1))
    assert np.all(weight.total == 0.0)
    assert np.all(weight.weights() == 1.0)


def test_constant_interior_path():
    weight = logweight_ito(constant_path(0.5, horizon=2.0), gaussian_model(1))
    assert weight.endpoint_term[0] == 0.0
    assert weight.boundary_term[0] == 0.0
    assert weight.bulk_term[0] == pytest.approx((1.0 - 0.25) * 2.0)


def test_constant_boundary_path():
    model = bounded_drift_model(1, c=0.7)
    weight = logweight_ito(constant_path(0.0, horizon=1.5, beta=0.5), model)
    # d H = -c on the wall, for the full horizon
    assert weight.boundary_term[0] == pytest.approx(-0.7 * 1.5 / 0.5)
    assert weight.bulk_term[0] == 0.0


def test_integral_form_needs_noise(params, rng):
    path = sample_exact_grid(0.3, uniform_grid(1.0, 10), params, rng)
    with pytest.raises(MissingNoiseError):
        logweight_integral(path, gaussian_model(1))


def test_dimension_mismatch(params, rng):
    path = sample_exact_grid(0.3, uniform_grid(1.0, 10), params, rng)
    with pytest.raises(DomainError):
        logweight_ito(path, gaussian_model(2))


@pytest.mark.slow
def test_integral_and_ito_forms_agree(params, rng):
    path = sample_timechange(1.0, 0.5, 1e-4, params, rng, n_paths=20)
    model = gaussian_model(1)
    ito = logweight_ito(path, model).total
    integral = logweight_integral(path, model)
    assert np.median(np.abs(ito - integral)) < 0.1


@pytest.mark.slow
def test_weight_form_gap_vanishes_with_the_step(params, rng):
    model = gaussian_model(1)
    gaps = []
    for dt in (1e-2, 1e-3, 1e-4):
        path = sample_timechange(0.5, 1.0, dt, params, rng, n_paths=1000, batch_size=500)
        diff = logweight_ito(path, model).total - logweight_integral(path, model)
        gaps.append((abs(diff.mean()), diff.var()))
    assert gaps[-1][0] < 0.02
    assert gaps[-1][0] < gaps[0][0] + 0.01
    assert gaps[0][1] > gaps[1][1] > gaps[2][1]


def test_integral_form_scalar_for_one_path(params, rng):
    path = sample_timechange(0.5, 0.1, 1e-3, params, rng)
    assert isinstance(logweight_integral(path, gaussian_model(1)), float)


# =========================================================================
# Weighted Monte Carlo
# =========================================================================
def test_weighted_mean_of_one(params, rng):
    estimate = weighted_expectation(
        lambda x: np.ones(x.shape[0]), 0.5, 0.5, gaussian_model(1), params, n_paths=4000, rng=rng
    )
    assert abs(estimate.estimate - 1.0) < 4.0 * estimate.stderr + 0.02
    assert 0.0 < estimate.ess <= 4000


def test_weighted_expectation_needs_paths(params, rng):
    with pytest.raises(DomainError):
        weighted_expectation(lambda x: x[:, 0], 0.5, 0.5, gaussian_model(1), params, n_paths=10, rng=rng)


def test_second_moment_exceeds_one(params, rng):
    moment = weight_moment(0.5, 0.5, gaussian_model(1), params, p=2.0, n_paths=2000, rng=rng, n_steps=100)
    assert moment.estimate > 0.95


# =========================================================================
# Tail control
# =========================================================================
def test_tail_constant_reference():
    assert tail_bound_C(3.0, 1.0, 1.0, 1) == pytest.approx(0.10798, abs=1e-5)
    assert tail_bound_C(3.0, 1.0, 1.0, 2) == pytest.approx(2 * 0.10798, abs=2e-5)


def test_tail_constant_decreases_in_k():
    values = [tail_bound_C(k, 1.0, 0.5, 3) for k in (1.5, 2.0, 3.0, 5.0)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_tail_constant_domain():
    with pytest.raises(DomainError):
        tail_bound_C(1.0, 1.0, 1.0, 1)


def test_probe_below_hoelder_bound(params, rng):
    model = gaussian_model(1)
    probe = truncated_weight_probe(0.5, 1.0, 3.0, model, params, n_paths=500, rng=rng)
    bound = holder_bound(0.5, 1.0, 3.0, model, params)
    assert 0.0 <= probe <= bound


def test_probe_needs_k_beyond_box(params, rng):
    with pytest.raises(DomainError):
        truncated_weight_probe(0.5, 2.0, 1.5, gaussian_model(1), params, n_paths=200, rng=rng)


# =========================================================================
# Kato potential
# =========================================================================
@pytest.mark.parametrize("lam,x,beta", [(1.0, 0.0, 1.0), (2.0, 0.7, 0.5), (0.3, 2.0, 3.0)])
def test_gaussian_kato_matches_quadrature(lam, x, beta):
    numeric = kato_potential(lam, x, gaussian_model(1), StickyParams(beta=beta))
    assert numeric == pytest.approx(gaussian_kato_closed_form(lam, x, beta), rel=1e-8)


def test_gaussian_kato_growth():
    # sup_x grows without bound for fixed lambda: the Gaussian drift is not Kato class
    values = [gaussian_kato_closed_form(1.0, x, 1.0) for x in (1.0, 10.0, 100.0)]
    assert values[2] / values[1] == pytest.approx(100.0, rel=0.03)
    # and at the wall it blows up like lambda^-2 as lambda -> 0
    small = gaussian_kato_closed_form(1e-4, 0.0, 1.0)
    assert small * 1e-8 == pytest.approx(4.0, rel=0.02)


def test_bounded_drift_kato_is_small_for_large_lambda(params):
    model = bounded_drift_model(1, c=1.0, support=1.0, width=1.0)
    values = [kato_potential(lam, 0.5, model, params, breakpoints=(1.0, 2.0)) for lam in (1.0, 10.0, 100.0)]
    assert all(math.isfinite(v) for v in values)
    assert values[0] > values[1] > values[2]
    assert values[2] < 0.1


def test_kato_is_one_dimensional(params):
    with pytest.raises(DomainError):
        kato_potential(1.0, 0.0, gaussian_model(2), params)
