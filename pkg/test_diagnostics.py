import json

import numpy as np
import pytest

from analysis.diagnostics import (
    FELLER_NOTE,
    CheckRecord,
    SuiteReport,
    _richardson_limit,
    atom_frequency_check,
    compare_final_samples,
    ergodic_occupation_check,
    exact_sampler,
    feller_probe,
    martingale_residual,
    sampler_agreement,
    save_report,
    tail_probe_check,
    weak_error_study,
    wentzell_check,
    wentzell_test_function,
)
from analysis.suites import gaussian_stationary_draw, resolve_suite, run_suite, suite_names
from errors import DomainError
from kernel import StickyParams
from mathcore import smooth_cutoff
from models import flat_model, gaussian_model, quadratic_potential, wetting_model
from paths import sample_exact_grid, uniform_grid


# =========================================================================
# Wentzell boundary condition
# =========================================================================
def test_richardson_recovers_limit():
    ts = np.array([1e-2, 1e-3, 1e-4])
    values = 0.7 + 2.0 * np.sqrt(ts) - 3.0 * ts
    assert _richardson_limit(ts, values) == pytest.approx(0.7, abs=1e-10)


def test_test_function_satisfies_boundary_condition():
    beta, h = 0.5, 1e-5
    f = wentzell_test_function(beta)
    first = (f(h) - f(0.0)) / h
    second = (f(2 * h) - 2 * f(h) + f(0.0)) / h**2
    assert beta * second == pytest.approx(first, rel=1e-3)


@pytest.mark.parametrize("beta", [1.0, 0.5])
def test_wentzell_limit(beta):
    record = wentzell_check(StickyParams(beta=beta))
    assert record.passed, record.details
    assert record.details["target"] == 1.0 / beta


def test_wentzell_cubic_has_zero_limit(params):
    record = wentzell_check(params, f=lambda y: y**3 * smooth_cutoff(y, 1.0, 2.0), target=0.0, label="cubic")
    assert record.passed, record.details


def test_wentzell_rejects_bad_sequence(params):
    with pytest.raises(DomainError):
        wentzell_check(params, t_sequence=(1e-4, 1e-3))
    with pytest.raises(DomainError):
        wentzell_check(params, f=lambda y: y)


# =========================================================================
# Feller probe and sampler agreement
# =========================================================================
def test_feller_probe_constant(params):
    record = feller_probe(1.0, lambda y: 1.0, np.linspace(0.0, 2.0, 5), params)
    assert record.passed
    assert record.statistic < 1e-9
    assert record.note == FELLER_NOTE


def test_feller_probe_needs_increasing_grid(params):
    with pytest.raises(DomainError):
        feller_probe(1.0, lambda y: 1.0, [1.0, 0.5], params)


def test_identical_samples_agree():
    sample = np.concatenate([np.zeros(300), np.linspace(0.1, 3.0, 700)])
    record = compare_final_samples(sample, sample.copy())
    assert record.passed
    assert record.statistic == 0.0
    assert record.details["atom_z"] == 0.0


def test_shifted_samples_disagree():
    a = np.concatenate([np.zeros(300), np.linspace(0.1, 3.0, 700)])
    record = compare_final_samples(a, a + 0.5)
    assert not record.passed


def test_grid_refinement_keeps_the_law(params, rng):
    record = sampler_agreement(exact_sampler(4), exact_sampler(1), 0.5, 0.2, params, 5000, rng)
    assert record.passed, record.details
    assert record.name.startswith("sampler agreement")


def test_atom_frequency(params, rng):
    record = atom_frequency_check(exact_sampler(1), 1.0, 0.0, params, 20_000, rng)
    assert record.passed, record.details


@pytest.mark.slow
def test_martingale_residual_flat(params, rng):
    path = sample_exact_grid([0.0], uniform_grid(1.0, 500), params, rng, n_paths=20_000)
    record = martingale_residual(path, flat_model(1), params, band=0.005)
    assert record.passed, record.details


def test_martingale_residual_needs_ensemble(params, rng):
    path = sample_exact_grid([0.0], uniform_grid(1.0, 5), params, rng)
    with pytest.raises(DomainError):
        martingale_residual(path, flat_model(1), params)


# =========================================================================
# Ergodic occupation and weak order
# =========================================================================
def test_ergodic_check_reports_batch_means(params, rng):
    record = ergodic_occupation_check(gaussian_model(1), params, 20.0, 1e-2, rng, n_chains=2, chunk_steps=500)
    assert record.details["batches"] == 8
    assert len(record.details["chain_fractions"]) == 2
    assert 0.0 < record.details["batch_means_stderr"] < 0.5
    assert record.details["target"] == pytest.approx(0.530165, abs=1e-6)


def test_stationary_draw_atom(rng):
    draws = gaussian_stationary_draw(1.0, 200_000, rng)
    assert np.mean(draws == 0.0) == pytest.approx(0.530165, abs=5e-3)
    assert np.mean(draws[draws > 0.0] ** 2) == pytest.approx(0.5, rel=0.02)


def test_weak_error_study_arguments(params, rng):
    f = lambda y: np.exp(-y)  # noqa: E731
    with pytest.raises(DomainError):
        weak_error_study(gaussian_model(2), f, 1.0, 0.0, StickyParams(beta=1.0, n=2), (0.1, 0.05), 0.5, 10, rng)
    with pytest.raises(DomainError):
        weak_error_study(gaussian_model(1), f, 1.0, np.zeros(3), params, (0.1, 0.05), 0.5, 10, rng)


@pytest.mark.slow
def test_weak_error_falls_under_halving(rng):
    record = dict(resolve_suite("samplers"))["weak-order"](rng)
    assert record.passed, record.details
    errors = record.details["errors"]
    assert errors[0] > errors[1] > errors[2]
    assert record.statistic >= 0.8


@pytest.mark.slow
def test_tail_probe_is_monotone(rng):
    model = wetting_model(2, quadratic_potential())
    record = tail_probe_check(model, StickyParams(beta=1.0, n=2), 1.0, 2.0, (4.0, 6.0, 8.0), 2000, rng)
    assert record.passed, record.details
    estimates, slack = record.details["estimates"], record.details["slack"]
    assert all(b <= a + slack for a, b in zip(estimates, estimates[1:]))


@pytest.mark.slow
@pytest.mark.parametrize(
    "suite, label",
    [
        ("samplers", "exact-vs-timechange"),
        ("samplers", "timechange-atom"),
        ("samplers", "euler-martingale"),
        ("samplers", "weighted-vs-euler"),
        ("samplers", "cdf-discrepancy"),
        ("girsanov", "gaussian-2"),
        ("girsanov", "gaussian-2-half"),
        ("girsanov", "wetting-2"),
        ("girsanov", "wetting-2-half"),
        ("girsanov", "wetting-3"),
        ("girsanov", "wetting-3-half"),
        ("girsanov", "weight-forms"),
        ("ergodic", "gaussian"),
        ("ergodic", "flat-reflected"),
        ("local-time", "identities"),
    ],
)
def test_suite_check_passes(suite, label, rng):
    record = dict(resolve_suite(suite))[label](rng)
    assert record.passed, record.details


# =========================================================================
# Suites and reports
# =========================================================================
def test_suite_registry():
    names = suite_names()
    assert names[-1] == "all"
    assert {"kernel-invariants", "samplers", "girsanov", "wentzell", "ergodic"} <= set(names)
    assert len(resolve_suite("all")) == sum(len(resolve_suite(n)) for n in names[:-1])
    with pytest.raises(DomainError):
        resolve_suite("nonsense")


def test_suite_is_deterministic():
    first = run_suite("feller", seed=3)
    second = run_suite("feller", seed=3, max_workers=3)
    assert first.model_dump() == second.model_dump()
    assert first.passed
    assert all(check.runtime is None for check in first.checks)


def test_runtime_only_on_request():
    report = run_suite("wentzell", seed=1, include_runtime=True)
    assert all(check.runtime is not None for check in report.checks)
    assert all(check.seed == 1 for check in report.checks)


def test_save_report(tmp_path):
    report = SuiteReport(
        suite="demo",
        seed=5,
        checks=[CheckRecord(name="a", statistic=0.1, tolerance=0.2, passed=True)],
    )
    out = tmp_path / "nested" / "report.json"
    save_report(report, str(out), config={"seed": 5})
    payload = json.loads(out.read_text())
    assert payload["passed"] is True
    assert payload["config"] == {"seed": 5}
    assert payload["report"]["checks"][0]["name"] == "a"
    assert list(payload) == sorted(payload)
