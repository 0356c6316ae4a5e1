# analysis/suites.py
"""
Named validation suites.

A suite is an ordered list of (name, check) pairs; every check receives its
own generator, the i-th child of SeedSequence(seed), so a report depends only
on (suite, seed) and not on how many threads ran it.
"""

import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np
from scipy import integrate, special, stats

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from analysis.diagnostics import (
    CheckRecord,
    SuiteReport,
    atom_frequency_check,
    ergodic_occupation_check,
    exact_sampler,
    feller_probe,
    local_time_consistency,
    martingale_residual,
    martingale_weight_check,
    sampler_agreement,
    semigroup_agreement,
    tail_probe_check,
    timechange_sampler,
    weak_error_study,
    weight_consistency,
    weighted_cdf_discrepancy,
    wentzell_check,
)
from errors import DomainError
from girsanov import gaussian_kato_closed_form, kato_potential
from kernel import (
    StickyParams,
    chapman_kolmogorov_residual,
    expectation,
    resolvent_atom,
    resolvent_density,
    sample_transition,
    transition_atom,
    transition_cdf,
    transition_density,
    transition_mass,
)
from mathcore import smooth_cutoff
from measure import ProductMeasureSpec, stationary_expectation
from models import bounded_drift_model, flat_model, gaussian_model, quadratic_potential, wetting_model
from paths import sample_euler_distorted, sample_exact_grid, uniform_grid
from utils import spawn_rngs

logger = logging.getLogger(__name__)

Check = Callable[[np.random.Generator], CheckRecord]

KERNEL_T = (0.1, 1.0, 10.0)
KERNEL_BETA = (0.1, 1.0, 10.0)
KERNEL_X = (0.0, 0.5, 5.0)


# ===== KERNEL INVARIANTS =====
def _mass_check(rng) -> CheckRecord:
    worst = 0.0
    for t in KERNEL_T:
        for beta in KERNEL_BETA:
            for x in KERNEL_X:
                worst = max(worst, abs(transition_mass(t, x, StickyParams(beta=beta)) - 1.0))
    return CheckRecord(name="kernel conservativeness", statistic=worst, tolerance=1e-6, passed=worst <= 1e-6)


def _symmetry_check(rng) -> CheckRecord:
    ys = np.array([0.0, 0.3, 1.0, 2.5])
    sym, atom_gap = 0.0, 0.0
    for t in KERNEL_T:
        for beta in KERNEL_BETA:
            params = StickyParams(beta=beta)
            for x in KERNEL_X:
                forward = transition_density(t, x, ys, params)
                backward = transition_density(t, ys, x, params)
                scale = np.maximum(np.abs(forward), 1e-300)
                sym = max(sym, float(np.max(np.abs(forward - backward) / scale)))
                atom = transition_atom(t, x, params)
                atom_gap = max(atom_gap, abs(atom - beta * transition_density(t, 0.0, x, params)) / max(atom, 1e-300))
    worst = max(sym, atom_gap)
    return CheckRecord(
        name="kernel mu-symmetry",
        statistic=worst,
        tolerance=1e-12,
        passed=worst <= 1e-12,
        details={"density_symmetry": sym, "atom_identity": atom_gap},
    )


def _atom_closed_form_check(rng) -> CheckRecord:
    worst = 0.0
    for t in KERNEL_T:
        for beta in KERNEL_BETA:
            z = math.sqrt(t) / beta
            # the unscaled product underflows for large z
            expected = math.exp(z * z) * special.erfc(z) if z < 7.0 else special.erfcx(z)
            got = transition_atom(t, 0.0, StickyParams(beta=beta))
            worst = max(worst, abs(got - expected) / expected)
    return CheckRecord(name="atom closed form at 0", statistic=worst, tolerance=1e-13, passed=worst <= 1e-13)


def _chapman_kolmogorov_check(rng) -> CheckRecord:
    params = StickyParams(beta=1.0)
    grid = (0.1, 0.5, 1.0, 2.0, 4.0)
    worst = 0.0
    for s in (0.5, 1.0):
        for t in (0.5, 1.0):
            for x in (0.0, 3.0):
                worst = max(worst, chapman_kolmogorov_residual(s, t, x, params, grid))
    return CheckRecord(name="chapman-kolmogorov", statistic=worst, tolerance=1e-5, passed=worst <= 1e-5)


def _laplace(fn: Callable[[float], float], lam: float) -> float:
    value, _ = integrate.quad(lambda t: math.exp(-lam * t) * fn(t), 0.0, math.inf, limit=400, epsabs=1e-12)
    return value


def _resolvent_check(rng) -> CheckRecord:
    params = StickyParams(beta=1.0)
    worst = 0.0
    for lam in (0.5, 1.0, 2.0):
        for x in (0.0, 1.0):
            atom = _laplace(lambda t: transition_atom(t, x, params) if t > 0 else float(x == 0.0), lam)
            worst = max(worst, abs(atom - resolvent_atom(lam, x, params)) / resolvent_atom(lam, x, params))
            for y in (0.5, 2.0):
                dens = _laplace(lambda t: transition_density(t, x, y, params) if t > 0 else 0.0, lam)
                target = resolvent_density(lam, x, y, params)
                worst = max(worst, abs(dens - target) / target)
    return CheckRecord(name="resolvent = laplace transform", statistic=worst, tolerance=1e-4, passed=worst <= 1e-4)


def _kernel_sampler_check(rng) -> CheckRecord:
    params = StickyParams(beta=1.0)
    t, x = 1.0, 0.5
    draws = sample_transition(t, np.full(20_000, x), params, rng)
    atom = transition_atom(t, x, params)
    positive = draws[draws > 0.0]
    conditional = lambda y: (transition_cdf(t, x, y, params) - atom) / (1.0 - atom)  # noqa: E731
    ks = stats.kstest(positive, conditional)
    z = abs(float(np.mean(draws == 0.0)) - atom) / math.sqrt(atom * (1.0 - atom) / draws.size)
    return CheckRecord(
        name="kernel sampler vs cdf",
        statistic=float(ks.statistic),
        tolerance=0.01,
        passed=bool(ks.pvalue >= 0.01 and z <= 3.0),
        details={"ks_pvalue": float(ks.pvalue), "atom_z": z},
    )


# ===== SAMPLERS =====
def _grid_invariance_check(rng) -> CheckRecord:
    return sampler_agreement(exact_sampler(32), exact_sampler(1), 1.0, 0.0, StickyParams(beta=1.0), 20_000, rng)


def _exact_vs_timechange_check(rng) -> CheckRecord:
    return sampler_agreement(
        exact_sampler(1), timechange_sampler(1e-4, batch_size=500), 1.0, 0.0, StickyParams(beta=1.0), 100_000, rng
    )


def _timechange_atom_check(rng) -> CheckRecord:
    return atom_frequency_check(timechange_sampler(1e-4, batch_size=500), 1.0, 0.0, StickyParams(beta=1.0), 50_000, rng)


def _zero_drift_identity_check(rng) -> CheckRecord:
    params = StickyParams(beta=1.0, n=2)
    grid = uniform_grid(1.0, 50)
    seed = int(rng.integers(2**32))
    exact = sample_exact_grid([0.3, 0.0], grid, params, np.random.default_rng(seed), n_paths=500)
    euler = sample_euler_distorted([0.3, 0.0], grid, params, flat_model(2), np.random.default_rng(seed), n_paths=500)
    identical = bool(np.array_equal(exact.states, euler.states))
    return CheckRecord(
        name="zero-drift splitting equals exact grid",
        statistic=float(np.max(np.abs(exact.states - euler.states))),
        tolerance=0.0,
        passed=identical,
    )


def _euler_martingale_check(rng) -> CheckRecord:
    params = StickyParams(beta=1.0)
    grid = uniform_grid(1.0, 1000)
    path = sample_euler_distorted([0.5], grid, params, gaussian_model(1), rng, n_paths=20_000)
    # left-endpoint integrals carry an O(dt) bias
    return martingale_residual(path, gaussian_model(1), params, band=5.0 * float(grid.steps[0]))


def _exact_martingale_check(rng) -> CheckRecord:
    params = StickyParams(beta=1.0)
    path = sample_exact_grid([0.0], uniform_grid(1.0, 500), params, rng, n_paths=20_000)
    return martingale_residual(path, flat_model(1), params, band=0.005)


def _semigroup_check(rng) -> CheckRecord:
    return semigroup_agreement(
        gaussian_model(1), lambda x: np.exp(-x), 1.0, 1.0, StickyParams(beta=1.0), 1e-3, 10_000, rng
    )


def _cdf_discrepancy_check(rng) -> CheckRecord:
    return weighted_cdf_discrepancy(gaussian_model(1), 1.0, 1.0, StickyParams(beta=1.0), (0.02, 0.005), 10_000, rng)


def gaussian_stationary_draw(beta: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """
    Draw from exp(-y^2) (dy + beta delta_0): the atom with probability
    beta / (beta + sqrt(pi) / 2), otherwise |N(0, 1/2)|.
    """
    atom = beta / (beta + 0.5 * math.sqrt(math.pi))
    positive = np.abs(rng.normal(0.0, math.sqrt(0.5), size))
    return np.where(rng.random(size) < atom, 0.0, positive)


def _weak_order_check(rng) -> CheckRecord:
    params, model = StickyParams(beta=1.0), gaussian_model(1)
    f = lambda y: np.exp(-y)  # noqa: E731
    reference = stationary_expectation(lambda x: f(x[:, 0]), model, ProductMeasureSpec(n=1, beta=1.0, R=8.0))
    n_paths = 400_000
    # started in the stationary law, E f(X_t) stays at the reference for every t
    starts = gaussian_stationary_draw(params.beta, n_paths, rng)
    return weak_error_study(
        model, f, 1.0, starts, params, (0.04, 0.02, 0.01), reference, n_paths, rng, batch_size=100_000
    )


# ===== GIRSANOV =====
def _martingale_weight(model_factory, n: int, t: float = 1.0) -> Check:
    def check(rng):
        return martingale_weight_check(model_factory(n), StickyParams(beta=1.0, n=n), t, [0.5] * n, 10_000, rng)

    return check


def _wetting(n: int):
    return wetting_model(n, quadratic_potential())


def _weight_forms_check(rng) -> CheckRecord:
    return weight_consistency(gaussian_model(1), StickyParams(beta=1.0), 1.0, 0.5, (1e-2, 1e-3, 1e-4), 1000, rng)


def _tail_check(rng) -> CheckRecord:
    return tail_probe_check(_wetting(2), StickyParams(beta=1.0, n=2), 1.0, 2.0, (4.0, 6.0, 8.0), 2000, rng)


# ===== WENTZELL =====
def _wentzell(beta: float) -> Check:
    return lambda rng: wentzell_check(StickyParams(beta=beta))


def _wentzell_cubic(rng) -> CheckRecord:
    return wentzell_check(
        StickyParams(beta=1.0), f=lambda y: y**3 * smooth_cutoff(y, 1.0, 2.0), target=0.0, label="cubic"
    )


# ===== ERGODIC =====
def _ergodic_gaussian(rng) -> CheckRecord:
    # ten long paths of horizon 1000; their chunks give batch-means error bars
    return ergodic_occupation_check(gaussian_model(1), StickyParams(beta=1.0), 1000.0, 1e-3, rng, n_chains=10)


def _ergodic_flat(rng) -> CheckRecord:
    params = StickyParams(beta=1.0)
    spec = ProductMeasureSpec(n=1, beta=1.0, R=2.0)
    return ergodic_occupation_check(flat_model(1), params, 1000.0, 1e-3, rng, spec=spec, reflect_at=2.0, n_chains=10)


# ===== LOCAL TIME =====
def _local_time_check(rng) -> CheckRecord:
    return local_time_consistency(StickyParams(beta=1.0), 1.0, 1e-5, 200, rng, batch_size=100)


# ===== KATO =====
def _kato_closed_form_check(rng) -> CheckRecord:
    model, params = gaussian_model(1), StickyParams(beta=1.0)
    worst = 0.0
    for lam in (0.5, 1.0, 2.0):
        for x in (0.0, 1.0, 3.0):
            exact = gaussian_kato_closed_form(lam, x, params.beta)
            worst = max(worst, abs(kato_potential(lam, x, model, params) - exact) / exact)
    return CheckRecord(
        name="kato potential, gaussian closed form", statistic=worst, tolerance=1e-6, passed=worst <= 1e-6
    )


def _kato_growth_check(rng) -> CheckRecord:
    model, params = gaussian_model(1), StickyParams(beta=1.0)
    xs = np.linspace(5.0, 50.0, 10)
    values = [kato_potential(1.0, float(x), model, params) for x in xs]
    exponent = float(np.polyfit(np.log(xs), np.log(values), 1)[0])
    return CheckRecord(
        name="kato potential grows like x^2",
        statistic=exponent,
        tolerance=1.9,
        passed=exponent >= 1.9,
        details={"x": xs.tolist(), "potential": values},
    )


def _kato_bounded_check(rng) -> CheckRecord:
    c = 1.0
    model, params = bounded_drift_model(1, c=c, support=1.0, width=1.0), StickyParams(beta=1.0)
    lams = (0.5, 1.0, 4.0, 16.0, 64.0)
    xs = np.linspace(0.0, 10.0, 21)
    sups = [max(kato_potential(lam, float(x), model, params, breakpoints=(1.0, 2.0)) for x in xs) for lam in lams]
    bounded = all(s <= 4.0 * c * c / lam for s, lam in zip(sups, lams))
    decreasing = all(b < a for a, b in zip(sups, sups[1:]))
    return CheckRecord(
        name="kato potential bounded for compact drift",
        statistic=sups[-1],
        tolerance=4.0 * c * c / lams[-1],
        passed=bounded and decreasing,
        details={"lambda": list(lams), "sup_potential": sups},
    )


# ===== FELLER =====
def _indicator(y):
    return np.where(np.asarray(y) <= 1.0, 1.0, 0.0)


def _feller_indicator_check(rng) -> CheckRecord:
    params = StickyParams(beta=1.0)
    coarse = feller_probe(1.0, _indicator, np.linspace(0.0, 3.0, 11), params, breakpoints=(1.0,))
    fine = feller_probe(1.0, _indicator, np.linspace(0.0, 3.0, 41), params, breakpoints=(1.0,))
    return fine.model_copy(
        update={
            "name": "feller probe, indicator of [0, 1]",
            "passed": fine.passed and fine.statistic < coarse.statistic,
            "details": {**fine.details, "coarse_modulus": coarse.statistic},
        }
    )


def _feller_constant_check(rng) -> CheckRecord:
    params = StickyParams(beta=1.0)
    probe = feller_probe(1.0, lambda y: 1.0, np.linspace(0.0, 3.0, 7), params, tolerance=1e-9)
    worst = float(np.max(np.abs(np.asarray(probe.details["values"]) - 1.0)))
    return probe.model_copy(update={"name": "feller probe, constant", "passed": probe.passed and worst <= 1e-9})


def _feller_identity_check(rng) -> CheckRecord:
    params = StickyParams(beta=1.0)
    xs = np.linspace(0.0, 3.0, 7)
    values = [expectation(lambda y: math.exp(-y), 1e-4, float(x), params) for x in xs]
    gap = float(np.max(np.abs(np.asarray(values) - np.exp(-xs))))
    return CheckRecord(name="p_t f -> f as t -> 0", statistic=gap, tolerance=0.01, passed=gap <= 0.01)


SUITES: dict[str, list[tuple[str, Check]]] = {
    "kernel-invariants": [
        ("mass", _mass_check),
        ("symmetry", _symmetry_check),
        ("atom-closed-form", _atom_closed_form_check),
        ("chapman-kolmogorov", _chapman_kolmogorov_check),
        ("resolvent", _resolvent_check),
        ("sampler", _kernel_sampler_check),
    ],
    "samplers": [
        ("grid-invariance", _grid_invariance_check),
        ("exact-vs-timechange", _exact_vs_timechange_check),
        ("timechange-atom", _timechange_atom_check),
        ("zero-drift-identity", _zero_drift_identity_check),
        ("exact-martingale", _exact_martingale_check),
        ("euler-martingale", _euler_martingale_check),
        ("weighted-vs-euler", _semigroup_check),
        ("cdf-discrepancy", _cdf_discrepancy_check),
        ("weak-order", _weak_order_check),
    ],
    "girsanov": [
        ("gaussian-1", _martingale_weight(gaussian_model, 1)),
        ("gaussian-1-half", _martingale_weight(gaussian_model, 1, t=0.5)),
        ("gaussian-2", _martingale_weight(gaussian_model, 2)),
        ("gaussian-2-half", _martingale_weight(gaussian_model, 2, t=0.5)),
        ("wetting-2", _martingale_weight(_wetting, 2)),
        ("wetting-2-half", _martingale_weight(_wetting, 2, t=0.5)),
        ("wetting-3", _martingale_weight(_wetting, 3)),
        ("wetting-3-half", _martingale_weight(_wetting, 3, t=0.5)),
        ("weight-forms", _weight_forms_check),
        ("tail-probe", _tail_check),
    ],
    "wentzell": [
        ("beta-1", _wentzell(1.0)),
        ("beta-0.5", _wentzell(0.5)),
        ("cubic", _wentzell_cubic),
    ],
    "ergodic": [
        ("gaussian", _ergodic_gaussian),
        ("flat-reflected", _ergodic_flat),
    ],
    "local-time": [
        ("identities", _local_time_check),
    ],
    "kato": [
        ("closed-form", _kato_closed_form_check),
        ("growth", _kato_growth_check),
        ("bounded", _kato_bounded_check),
    ],
    "feller": [
        ("indicator", _feller_indicator_check),
        ("constant", _feller_constant_check),
        ("identity", _feller_identity_check),
    ],
}


def suite_names() -> list[str]:
    return [*SUITES, "all"]


def resolve_suite(name: str) -> list[tuple[str, Check]]:
    if name == "all":
        return [(f"{suite}/{label}", check) for suite, checks in SUITES.items() for label, check in checks]
    if name not in SUITES:
        raise DomainError(f"unknown suite {name!r}; choose one of {suite_names()}")
    return SUITES[name]


def run_suite(
    name: str,
    seed: int = 42,
    max_workers: int | None = None,
    include_runtime: bool = False,
) -> SuiteReport:
    """
    Run every check of a suite and collect a SuiteReport.

    Args:
        name: suite name or "all"
        seed: master seed; check i draws from child i of SeedSequence(seed)
        max_workers: threads for concurrent checks
        include_runtime: store wall-clock seconds in the records (breaks
            byte-identical reports, so off by default)
    """
    checks = resolve_suite(name)
    rngs = spawn_rngs(seed, len(checks))

    banner = "=" * 60
    logger.info(f"\n{banner}\nRunning suite: {name} ({len(checks)} checks, seed {seed})\n{banner}")

    def run(index: int) -> CheckRecord:
        label, check = checks[index]
        started = time.perf_counter()
        record = check(rngs[index])
        elapsed = time.perf_counter() - started
        mark = "✓" if record.passed else "✗"
        logger.info(f"{mark} {label}: {record.statistic:.4g} vs {record.tolerance:.4g} ({elapsed:.1f}s)")
        update = {"seed": seed}
        if include_runtime:
            update["runtime"] = elapsed
        return record.model_copy(update=update)

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            records = list(executor.map(run, range(len(checks))))
    else:
        records = [run(i) for i in range(len(checks))]
    return SuiteReport(suite=name, seed=seed, checks=records)
