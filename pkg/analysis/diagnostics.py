# analysis/diagnostics.py
"""
Executable checks of the structural claims about sticky diffusions.

Each check returns a CheckRecord with the statistic it measured, the
tolerance it compared against and the verdict. Checks never raise on a
failed comparison; they raise only on invalid input or numerical failure.
"""

import json
import logging
import math
import os
import sys
from typing import Any, Callable, Sequence

import numpy as np
from pydantic import BaseModel, Field
from scipy import stats

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from errors import DomainError
from girsanov import (
    holder_bound,
    logweight_integral,
    logweight_ito,
    truncated_weight_probe,
    weighted_expectation,
)
from kernel import StickyParams, expectation, transition_atom
from mathcore import smooth_cutoff
from measure import ProductMeasureSpec, stationary_expectation
from models import DensityModel
from paths import (
    epsilon_local_time,
    local_time,
    sample_euler_distorted,
    sample_exact_grid,
    sample_timechange,
    uniform_grid,
)
from utils import TOOLKIT_VERSION

logger = logging.getLogger(__name__)

FELLER_NOTE = "continuity-modulus smoke test; falsifies gross discontinuity, does not prove the Feller property"

# final states (P,) of a one-dimensional sampler
FinalSampler = Callable[[float, float, StickyParams, int, np.random.Generator], np.ndarray]


class CheckRecord(BaseModel):
    """One executed check."""

    name: str
    statistic: float
    tolerance: float
    passed: bool
    seed: int | None = None
    details: dict[str, Any] = Field(default_factory=dict)
    note: str | None = None
    runtime: float | None = None


class SuiteReport(BaseModel):
    """All checks of one suite run, in registry order."""

    suite: str
    seed: int
    version: str = TOOLKIT_VERSION
    checks: list[CheckRecord]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


# =========================================================================
# Ergodic occupation
# =========================================================================
def ergodic_occupation_check(
    model: DensityModel,
    params: StickyParams,
    horizon: float,
    dt: float,
    rng: np.random.Generator,
    spec: ProductMeasureSpec | None = None,
    reflect_at: float | None = None,
    n_chains: int = 1,
    chunk_steps: int = 10_000,
    tolerance: float = 0.05,
) -> CheckRecord:
    """
    Time fraction at 0 of coordinate 1 along long euler paths vs the
    stationary weight of {x_1 = 0}.

    Each of the n_chains paths runs the full horizon in chunks of
    chunk_steps steps carrying the last state, so memory does not grow with
    the horizon. Every chunk is one batch for the batch-means standard error
    of the pooled fraction; the per-chain fractions are reported as well.
    """
    if spec is None:
        spec = ProductMeasureSpec(n=params.n, beta=params.beta, R=reflect_at or 8.0)
    target = stationary_expectation(lambda x: (x[:, 0] == 0.0).astype(float), model, spec)

    steps_total = max(1, round(horizon / dt))
    x = np.zeros((n_chains, params.n))
    occupation = np.zeros(n_chains)
    batch_fractions = []
    done = 0
    while done < steps_total:
        steps = min(chunk_steps, steps_total - done)
        grid = uniform_grid(steps * dt, steps)
        path = sample_euler_distorted(x, grid, params, model, rng, n_paths=n_chains, reflect_at=reflect_at)
        chunk = path.boundary_occupation[-1, :, 0]
        occupation += chunk
        if steps == chunk_steps:
            batch_fractions.extend((chunk / (steps * dt)).tolist())
        x = path.final()
        done += steps

    fraction = float(np.mean(occupation) / (steps_total * dt))
    batches = np.asarray(batch_fractions)
    stderr = float(np.std(batches, ddof=1) / math.sqrt(batches.size)) if batches.size > 1 else math.nan
    error = abs(fraction - target) / target
    logger.debug(f"occupation fraction {fraction:.5f} +- {stderr:.5f} vs stationary {target:.5f}")
    return CheckRecord(
        name=f"ergodic occupation ({model.name}, n={params.n})",
        statistic=error,
        tolerance=tolerance,
        passed=error <= tolerance,
        details={
            "time_fraction": fraction,
            "batch_means_stderr": stderr,
            "batches": int(batches.size),
            "chain_fractions": (occupation / (steps_total * dt)).tolist(),
            "target": target,
            "horizon": steps_total * dt,
            "chains": n_chains,
        },
    )


# =========================================================================
# SDE martingale residuals
# =========================================================================
def martingale_residual(
    path,
    model: DensityModel,
    params: StickyParams,
    sigmas: float = 3.0,
    band: float = 0.0,
) -> CheckRecord:
    """
    Per component, on an ensemble:

        R = X_t - X_0 - int 1{X > 0} d_i ln rho(X) ds - (1/beta) int 1{X = 0} ds,   E[R] = 0
        E[R^2] = 2 E[int 1{X > 0} ds]

    Integrals are left-endpoint sums. A component passes when both mean
    differences lie within sigmas * stderr + band.
    """
    if path.n_paths < 2:
        raise DomainError("martingale residuals need an ensemble of at least two paths")
    X = path.states
    dt = path.grid.steps[:, None, None]
    drift = model.drift(X[:-1])
    drift_integral = np.sum(np.where(X[:-1] > 0.0, drift, 0.0) * dt, axis=0)
    occupation = path.boundary_occupation[-1]
    residual = X[-1] - X[0] - drift_integral - occupation / params.beta
    quadratic = residual**2 - 2.0 * (path.grid.horizon - occupation)

    worst_z = 0.0
    passed = True
    details = {}
    for i in range(path.n):
        for label, sample in (("mean", residual[:, i]), ("quadratic", quadratic[:, i])):
            mean = float(np.mean(sample))
            stderr = float(np.std(sample, ddof=1) / math.sqrt(sample.size))
            z = abs(mean) / stderr if stderr > 0.0 else (0.0 if mean == 0.0 else math.inf)
            worst_z = max(worst_z, z)
            passed &= abs(mean) <= sigmas * stderr + band
            details[f"{label}_{i}"] = {"mean": mean, "stderr": stderr}
    return CheckRecord(
        name=f"martingale residual ({model.name}, n={path.n})",
        statistic=worst_z,
        tolerance=sigmas,
        passed=bool(passed),
        details={**details, "band": band},
    )


# =========================================================================
# Wentzell boundary condition
# =========================================================================
def wentzell_test_function(beta: float) -> Callable[[float], float]:
    """f(y) = (y + y^2 / (2 beta)) chi(y); beta f''(0) = f'(0) and f''(0) = 1/beta."""
    return lambda y: (y + y * y / (2.0 * beta)) * smooth_cutoff(y, 1.0, 2.0)


def _richardson_limit(ts: np.ndarray, values: np.ndarray) -> float:
    # D(t) = L + a sqrt(t) + b t + ..., solved on the given points
    basis = np.vstack([np.ones_like(ts), np.sqrt(ts), ts][: ts.size]).T
    coeffs, *_ = np.linalg.lstsq(basis, values, rcond=None)
    return float(coeffs[0])


def wentzell_check(
    params: StickyParams,
    t_sequence: Sequence[float] = (1e-2, 1e-3, 1e-4),
    f: Callable[[float], float] | None = None,
    target: float | None = None,
    tolerance: float = 0.02,
    label: str = "quadratic",
) -> CheckRecord:
    """
    Extrapolate (p_t f(0) - f(0)) / t to t -> 0 by kernel quadrature.

    Defaults to the quadratic test function with target f''(0) = 1/beta.
    The tolerance is relative, or absolute when the target is 0.
    """
    ts = np.asarray(t_sequence, dtype=float)
    if ts.size < 2 or np.any(np.diff(ts) >= 0.0) or np.any(ts <= 0.0):
        raise DomainError(f"t_sequence must be positive and decreasing, got {list(t_sequence)}")
    if f is None:
        f = wentzell_test_function(params.beta)
        target = 1.0 / params.beta
    if target is None:
        raise DomainError("a custom test function needs an explicit target")

    f0 = float(f(0.0))
    quotients = np.array(
        [(expectation(f, float(t), 0.0, params, breakpoints=(1.0, 2.0)) - f0) / t for t in ts]
    )
    limit = _richardson_limit(ts, quotients)
    error = abs(limit - target) / abs(target) if target != 0.0 else abs(limit)
    return CheckRecord(
        name=f"wentzell limit ({label}, beta={params.beta:g})",
        statistic=error,
        tolerance=tolerance,
        passed=error <= tolerance,
        details={"limit": limit, "target": target, "t": ts.tolist(), "quotients": quotients.tolist()},
    )


# =========================================================================
# Feller continuity probe
# =========================================================================
def feller_probe(
    t: float,
    f: Callable,
    x_grid: Sequence[float],
    params: StickyParams,
    model: DensityModel | None = None,
    tolerance: float = 0.05,
    breakpoints: Sequence[float] = (),
    n_paths: int = 4000,
    rng: np.random.Generator | None = None,
) -> CheckRecord:
    """
    Evaluate p_t f on x_grid and report the largest jump between neighbours.

    Without a model (rho = 1) p_t f comes from kernel quadrature; with a
    model from the weighted Monte Carlo estimator, which needs rng and a
    vectorised f.
    """
    grid = np.asarray(x_grid, dtype=float)
    if grid.size < 2 or np.any(np.diff(grid) <= 0.0):
        raise DomainError("x_grid must be increasing with at least two points")
    if model is None:
        values = np.array([expectation(f, t, float(x), params, breakpoints=breakpoints) for x in grid])
    else:
        if rng is None:
            raise DomainError("a Monte Carlo Feller probe needs an rng")
        values = np.array(
            [
                weighted_expectation(lambda s: f(s[:, 0]), t, [x], model, params, n_paths, rng).estimate
                for x in grid
            ]
        )
    modulus = float(np.max(np.abs(np.diff(values))))
    return CheckRecord(
        name=f"feller probe (t={t:g}, {len(grid)} points)",
        statistic=modulus,
        tolerance=tolerance,
        passed=modulus <= tolerance,
        details={"x": grid.tolist(), "values": values.tolist()},
        note=FELLER_NOTE,
    )


# =========================================================================
# Cross-sampler agreement
# =========================================================================
def exact_sampler(n_steps: int = 1) -> FinalSampler:
    def draw(t, x0, params, n_paths, rng):
        path = sample_exact_grid([x0], uniform_grid(t, n_steps), params, rng, n_paths=n_paths)
        return path.final()[:, 0]

    return draw


def timechange_sampler(dt: float = 1e-4, batch_size: int = 1000) -> FinalSampler:
    def draw(t, x0, params, n_paths, rng):
        times = np.array([0.0, t])
        path = sample_timechange(x0, t, dt, params, rng, n_paths=n_paths, times=times, batch_size=batch_size)
        return path.final()[:, 0]

    return draw


def euler_sampler(model: DensityModel, dt: float) -> FinalSampler:
    def draw(t, x0, params, n_paths, rng):
        grid = uniform_grid(t, max(1, round(t / dt)))
        return sample_euler_distorted([x0], grid, params, model, rng, n_paths=n_paths).final()[:, 0]

    return draw


def sampler_agreement(
    sampler_a: FinalSampler,
    sampler_b: FinalSampler,
    t: float,
    x0: float,
    params: StickyParams,
    n_paths: int,
    rng: np.random.Generator,
    alpha: float = 0.01,
    z_max: float = 3.0,
) -> CheckRecord:
    """
    Two-sample KS test on the continuous parts plus a two-proportion z-test
    on the atom frequencies at 0.
    """
    a = sampler_a(t, x0, params, n_paths, rng)
    b = sampler_b(t, x0, params, n_paths, rng)
    record = compare_final_samples(a, b, alpha, z_max)
    return record.model_copy(update={"name": f"sampler agreement (t={t:g}, x0={x0:g}, beta={params.beta:g})"})


def compare_final_samples(a, b, alpha: float = 0.01, z_max: float = 3.0) -> CheckRecord:
    """KS on the positive parts and a two-proportion z-test on the zeros of two samples."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    pa, pb = float(np.mean(a == 0.0)), float(np.mean(b == 0.0))
    pooled = (pa * a.size + pb * b.size) / (a.size + b.size)
    se = math.sqrt(pooled * (1.0 - pooled) * (1.0 / a.size + 1.0 / b.size))
    z = abs(pa - pb) / se if se > 0.0 else 0.0
    ks = stats.ks_2samp(a[a > 0.0], b[b > 0.0])
    passed = ks.pvalue >= alpha and z <= z_max
    return CheckRecord(
        name="sample agreement",
        statistic=float(ks.statistic),
        tolerance=alpha,
        passed=bool(passed),
        details={"ks_pvalue": float(ks.pvalue), "atom_a": pa, "atom_b": pb, "atom_z": z, "z_max": z_max},
    )


def _weighted_cdf(path, z: np.ndarray, levels: np.ndarray) -> np.ndarray:
    final = path.final()[:, 0]
    return np.array([np.mean(z * (final <= y)) for y in levels])


def weighted_cdf_discrepancy(
    model: DensityModel,
    t: float,
    x0: float,
    params: StickyParams,
    dts: Sequence[float],
    n_paths: int,
    rng: np.random.Generator,
    levels: Sequence[float] | None = None,
    weight_steps: int = 400,
    ks_coefficient: float = 1.63,
) -> CheckRecord:
    """
    sup_y |F_euler(dt)(y) - F_weighted(y)| for every dt, coordinate 1.

    Passes when every discrepancy lies below the two-sample critical value
    ks_coefficient * sqrt(1/ess + 1/n_paths) (1.63 is the 1% level). The
    order of convergence in dt is measured by weak_error_study.
    """
    ys = np.linspace(0.0, x0 + 4.0 * math.sqrt(t), 41) if levels is None else np.asarray(levels, dtype=float)
    reference = sample_exact_grid([x0] * params.n, uniform_grid(t, weight_steps), params, rng, n_paths=n_paths)
    z = logweight_ito(reference, model).weights()
    F_w = _weighted_cdf(reference, z, ys)
    ess = float(np.sum(z) ** 2 / np.sum(z * z))
    critical = ks_coefficient * math.sqrt(1.0 / ess + 1.0 / n_paths)

    discrepancies = []
    for dt in sorted(dts, reverse=True):
        grid = uniform_grid(t, max(1, round(t / dt)))
        euler = sample_euler_distorted([x0] * params.n, grid, params, model, rng, n_paths=n_paths)
        F_e = _weighted_cdf(euler, np.ones(n_paths), ys)
        discrepancies.append(float(np.max(np.abs(F_e - F_w))))

    return CheckRecord(
        name=f"euler vs weighted cdf ({model.name})",
        statistic=max(discrepancies),
        tolerance=critical,
        passed=max(discrepancies) <= critical,
        details={"dts": sorted(dts, reverse=True), "discrepancies": discrepancies, "ess": ess},
    )


def weak_error_study(
    model: DensityModel,
    f: Callable[[np.ndarray], np.ndarray],
    t: float,
    x0,
    params: StickyParams,
    dts: Sequence[float],
    reference: float,
    n_paths: int,
    rng: np.random.Generator,
    min_order: float = 0.8,
    sigmas: float = 3.0,
    batch_size: int = 50_000,
) -> CheckRecord:
    """
    |E f(X_t^euler(dt)) - reference| per dt and the observed weak order
    (slope of log error against log dt), coordinate 1 of a one-dimensional
    model.

    x0 is a start point or an array of n_paths start points; a draw from the
    stationary law makes the stationary expectation the reference at every t.
    Passes when the error falls at every refinement, the slope reaches
    min_order and the error at the smallest dt exceeds sigmas standard errors.
    """
    if params.n != 1:
        raise DomainError(f"the weak error study is one-dimensional, got n={params.n}")
    starts = np.asarray(x0, dtype=float).reshape(-1)
    if starts.size not in (1, n_paths):
        raise DomainError(f"x0 must be a point or {n_paths} start points, got {starts.size}")
    starts = np.broadcast_to(starts, (n_paths,))
    dts = sorted(dts, reverse=True)
    errors, stderrs = [], []
    for dt in dts:
        grid = uniform_grid(t, max(1, round(t / dt)))
        total, total_sq = 0.0, 0.0
        for lo in range(0, n_paths, batch_size):
            batch = starts[lo : lo + batch_size, None]
            final = sample_euler_distorted(batch, grid, params, model, rng, n_paths=len(batch)).final()[:, 0]
            values = np.asarray(f(final), dtype=float)
            total += float(np.sum(values))
            total_sq += float(np.sum(values * values))
        mean = total / n_paths
        variance = max(total_sq / n_paths - mean * mean, 0.0)
        errors.append(abs(mean - reference))
        stderrs.append(math.sqrt(variance / n_paths))
        logger.debug(f"dt={dt:g}: weak error {errors[-1]:.3e} (stderr {stderrs[-1]:.1e})")

    slope = float(np.polyfit(np.log(dts), np.log(np.maximum(errors, 1e-300)), 1)[0])
    falling = all(b < a for a, b in zip(errors, errors[1:]))
    resolved = errors[-1] > sigmas * stderrs[-1]
    return CheckRecord(
        name=f"euler weak error ({model.name})",
        statistic=slope,
        tolerance=min_order,
        passed=bool(slope >= min_order and falling and resolved),
        details={"dts": dts, "errors": errors, "stderr": stderrs, "reference": reference},
    )


# =========================================================================
# Local time
# =========================================================================
def local_time_consistency(
    params: StickyParams,
    horizon: float,
    dt: float,
    n_paths: int,
    rng: np.random.Generator,
    eps_values: Sequence[float] | None = None,
    x0: float = 0.0,
    tolerance: float = 0.02,
    eps_tolerance: float = 0.05,
    batch_size: int = 200,
) -> CheckRecord:
    """
    On the same time-change paths compare the ensemble means of

        (1/beta) int 1{X = 0} ds     occupation local time
        L(A^{-1}(t))                 Skorokhod regulator in output time
        (1/eps) int 1_(0, eps)(X) ds extrapolated linearly to eps -> 0
    """
    path = sample_timechange(x0, horizon, dt, params, rng, n_paths=n_paths, batch_size=batch_size)
    if eps_values is None:
        # thresholds well above the internal step scale
        eps_values = [40.0 * math.sqrt(dt), 20.0 * math.sqrt(dt), 10.0 * math.sqrt(dt)]
    occupation = float(np.mean(local_time(path, 0)))
    regulator = float(np.mean(path.skorokhod_local_time[-1, :, 0]))
    eps = np.asarray(eps_values, dtype=float)
    estimates = np.array([float(np.mean(epsilon_local_time(path, 0, e))) for e in eps])
    slope, intercept = np.polyfit(eps, estimates, 1)

    scale = max(regulator, 1e-12)
    error = abs(occupation - regulator) / scale
    eps_error = abs(float(intercept) - occupation) / scale
    return CheckRecord(
        name=f"local time identities (beta={params.beta:g}, dt={dt:g})",
        statistic=error,
        tolerance=tolerance,
        passed=error <= tolerance and eps_error <= eps_tolerance,
        details={
            "occupation_local_time": occupation,
            "skorokhod_local_time": regulator,
            "eps": eps.tolist(),
            "eps_estimates": estimates.tolist(),
            "eps_limit": float(intercept),
            "eps_relative_error": eps_error,
            "eps_tolerance": eps_tolerance,
        },
    )


# =========================================================================
# Reports
# =========================================================================
def save_report(report: SuiteReport, output_path: str, config: dict | None = None) -> None:
    """Write the report (and the resolved config) as sorted, indented JSON."""
    payload = {"report": report.model_dump(mode="json"), "passed": report.passed}
    if config is not None:
        payload["config"] = config
    directory = os.path.dirname(output_path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(output_path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"Report saved to: {output_path}")


def print_report_summary(report: SuiteReport) -> None:
    """Log a human-readable verdict table."""
    logger.info("\n" + "=" * 60)
    logger.info(f"SUITE SUMMARY: {report.suite} (seed {report.seed})")
    logger.info("=" * 60)
    for check in report.checks:
        mark = "✓" if check.passed else "✗"
        logger.info(f"{mark} {check.name}: statistic {check.statistic:.4g} (tolerance {check.tolerance:.4g})")
        if check.note:
            logger.info(f"   note: {check.note}")
    passed = sum(c.passed for c in report.checks)
    logger.info(f"\n{passed}/{len(report.checks)} checks passed")
    logger.info("=" * 60 + "\n")


# =========================================================================
# Distorted semigroup and Girsanov weights
# =========================================================================
def atom_frequency_check(
    sampler: FinalSampler,
    t: float,
    x0: float,
    params: StickyParams,
    n_paths: int,
    rng: np.random.Generator,
    z_max: float = 3.0,
) -> CheckRecord:
    """Binomial z-score of the sampled frequency of exact zeros against the kernel atom."""
    sample = np.asarray(sampler(t, x0, params, n_paths, rng))
    atom = transition_atom(t, x0, params)
    frequency = float(np.mean(sample == 0.0))
    z = abs(frequency - atom) / math.sqrt(atom * (1.0 - atom) / sample.size)
    return CheckRecord(
        name=f"atom frequency (t={t:g}, x0={x0:g}, beta={params.beta:g})",
        statistic=z,
        tolerance=z_max,
        passed=z <= z_max,
        details={"frequency": frequency, "atom": atom, "paths": int(sample.size)},
    )


def semigroup_agreement(
    model: DensityModel,
    f: Callable[[np.ndarray], np.ndarray],
    t: float,
    x0: float,
    params: StickyParams,
    dt: float,
    n_paths: int,
    rng: np.random.Generator,
    sigmas: float = 3.0,
    relative: float = 0.05,
) -> CheckRecord:
    """
    Weighted estimate of p_t f(x0) vs the euler splitting average, accepted
    within sigmas combined standard errors plus a relative margin.
    """
    weighted = weighted_expectation(lambda x: f(x[:, 0]), t, [x0] * params.n, model, params, n_paths, rng)
    sample = f(euler_sampler(model, dt)(t, x0, params, n_paths, rng))
    euler_mean = float(np.mean(sample))
    euler_se = float(np.std(sample, ddof=1) / math.sqrt(sample.size))
    combined = math.hypot(weighted.stderr, euler_se)
    gap = abs(weighted.estimate - euler_mean)
    allowed = sigmas * combined + relative * abs(weighted.estimate)
    return CheckRecord(
        name=f"weighted vs euler semigroup ({model.name}, dt={dt:g})",
        statistic=gap,
        tolerance=allowed,
        passed=gap <= allowed,
        details={
            "weighted": weighted.estimate,
            "weighted_stderr": weighted.stderr,
            "ess": weighted.ess,
            "euler": euler_mean,
            "euler_stderr": euler_se,
        },
    )


def martingale_weight_check(
    model: DensityModel,
    params: StickyParams,
    t: float,
    x0,
    n_paths: int,
    rng: np.random.Generator,
    sigmas: float = 3.0,
) -> CheckRecord:
    """E[Z_t] = 1 within sigmas standard errors."""
    estimate = weighted_expectation(lambda x: np.ones(len(x)), t, x0, model, params, n_paths, rng)
    z = abs(estimate.estimate - 1.0) / estimate.stderr if estimate.stderr > 0.0 else 0.0
    return CheckRecord(
        name=f"girsanov martingale ({model.name}, n={model.n}, t={t:g})",
        statistic=z,
        tolerance=sigmas,
        passed=z <= sigmas,
        details=estimate._asdict(),
    )


def weight_consistency(
    model: DensityModel,
    params: StickyParams,
    t: float,
    x0: float,
    dts: Sequence[float],
    n_paths: int,
    rng: np.random.Generator,
    sigmas: float = 3.0,
) -> CheckRecord:
    """
    Ito-reduced vs stochastic-integral log weight on identical time-change
    paths over a ladder of internal steps.

    The variance of the difference must fall down the ladder and its mean
    must vanish: the mean at the smallest dt, or the dt -> 0 limit of a fit
    a + b sqrt(dt), lies within sigmas standard errors of 0. The masks at
    the wall leave a bias of order sqrt(dt) at each finite step.
    """
    dts = sorted(dts, reverse=True)
    if len(dts) < 2 or n_paths < 2:
        raise DomainError("weight consistency needs at least two step sizes and two paths")
    means, stderrs, variances = [], [], []
    for dt in dts:
        path = sample_timechange(x0, t, dt, params, rng, n_paths=n_paths, batch_size=500)
        diff = logweight_ito(path, model).total - np.atleast_1d(logweight_integral(path, model))
        means.append(float(np.mean(diff)))
        stderrs.append(float(np.std(diff, ddof=1) / math.sqrt(diff.size)))
        variances.append(float(np.var(diff)))

    design = np.column_stack([np.ones(len(dts)), np.sqrt(dts)])
    weights = np.linalg.pinv(design)[0]
    limit = float(weights @ np.asarray(means))
    limit_se = float(np.sqrt(np.sum((weights * np.asarray(stderrs)) ** 2)))
    z_last = abs(means[-1]) / stderrs[-1] if stderrs[-1] > 0.0 else 0.0
    z_limit = abs(limit) / limit_se if limit_se > 0.0 else 0.0
    statistic = min(z_last, z_limit)
    falling = all(b < a for a, b in zip(variances, variances[1:]))
    return CheckRecord(
        name=f"log-weight forms agree ({model.name})",
        statistic=statistic,
        tolerance=sigmas,
        passed=bool(statistic <= sigmas and falling),
        details={
            "dts": dts,
            "mean_difference": means,
            "stderr": stderrs,
            "variance": variances,
            "limit": limit,
            "limit_stderr": limit_se,
        },
    )


def tail_probe_check(
    model: DensityModel,
    params: StickyParams,
    t: float,
    D: float,
    ks: Sequence[float],
    n_paths: int,
    rng: np.random.Generator,
) -> CheckRecord:
    """
    Truncated weight probe over increasing k: non-increasing (up to Monte
    Carlo noise) and below the Hoelder bound at every k.
    """
    ks = sorted(ks)
    estimates = [truncated_weight_probe(t, D, k, model, params, n_paths, rng) for k in ks]
    bounds = [holder_bound(t, D, k, model, params) for k in ks]
    slack = 3.0 / math.sqrt(n_paths)
    monotone = all(b <= a + slack for a, b in zip(estimates, estimates[1:]))
    below = all(e <= b + slack for e, b in zip(estimates, bounds))
    return CheckRecord(
        name=f"truncated weight probe ({model.name}, n={model.n})",
        statistic=estimates[-1],
        tolerance=bounds[-1],
        passed=monotone and below,
        details={"k": ks, "estimates": estimates, "holder_bounds": bounds, "slack": slack},
    )
