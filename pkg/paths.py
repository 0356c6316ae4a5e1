# paths.py
"""
Path samplers for sticky Brownian motion and its distorted versions.

    sample_exact_grid      - chain the exact kernel sampler over a time grid
    sample_timechange      - reflecting Brownian motion slowed down at 0 by
                             the clock A = t + beta L (n = 1)
    sample_euler_distorted - exact sticky step + drift substep (Lie splitting)

Every sampler returns a PathSample ensemble: states have shape
(times, paths, n). Boundary occupation is accumulated with the left-endpoint
rule and an exact-zero test, which is well defined because the kernel sampler
returns exact zeros on its atom.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from errors import DomainError, DriftOverflowError, StepSizeError
from kernel import StickyParams, product_sample
from models import DensityModel
from utils import spawn_rngs

logger = logging.getLogger(__name__)

STEP_SAFETY = 0.5
TIMECHANGE_BATCH = 2000


# =========================================================================
# Containers
# =========================================================================
@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing output times starting at 0."""

    times: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise DomainError("a time grid needs at least two times")
        if not np.all(np.isfinite(times)) or times[0] != 0.0:
            raise DomainError("time grid must be finite and start at 0")
        if np.any(np.diff(times) <= 0.0):
            raise DomainError("time grid must be strictly increasing")
        object.__setattr__(self, "times", times)

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def __len__(self) -> int:
        return self.times.size


def uniform_grid(horizon: float, n_steps: int) -> TimeGrid:
    if horizon <= 0.0 or n_steps < 1:
        raise DomainError(f"need horizon > 0 and n_steps >= 1, got ({horizon}, {n_steps})")
    return TimeGrid(np.linspace(0.0, horizon, n_steps + 1))


@dataclass(frozen=True)
class PathSample:
    """
    An ensemble of paths on a common grid.

    Attributes:
        grid: output times
        states: (T+1, P, n) non-negative states
        boundary_occupation: (T+1, P, n) cumulative sum of dt * 1{state == 0}
            over steps, left-endpoint rule
        beta: stickiness the paths were drawn with
        noise: optional (T, P, n) driving increments
        noise_exact: False when noise holds proxies rather than true increments
        skorokhod_local_time: optional (T+1, P, n) regulator L read in output time
    """

    grid: TimeGrid
    states: np.ndarray
    boundary_occupation: np.ndarray
    beta: float
    noise: np.ndarray | None = None
    noise_exact: bool = True
    skorokhod_local_time: np.ndarray | None = None

    def __post_init__(self):
        if self.states.ndim != 3 or self.states.shape[0] != len(self.grid):
            raise DomainError(f"states of shape {self.states.shape} do not fit a grid of {len(self.grid)} times")
        if np.any(self.states < 0.0):
            raise DomainError("path states must be non-negative")
        if self.noise is not None and self.noise.shape != (len(self.grid) - 1, *self.states.shape[1:]):
            raise DomainError(f"noise of shape {self.noise.shape} does not match the path")

    @property
    def n_paths(self) -> int:
        return self.states.shape[1]

    @property
    def n(self) -> int:
        return self.states.shape[2]

    def final(self) -> np.ndarray:
        """States at the horizon, shape (P, n)."""
        return self.states[-1]


def _occupation(states: np.ndarray, steps: np.ndarray) -> np.ndarray:
    at_zero = states[:-1] == 0.0
    increments = steps[:, None, None] * at_zero
    return np.concatenate([np.zeros((1, *states.shape[1:])), np.cumsum(increments, axis=0)])


def _start(x0, n: int, n_paths: int) -> np.ndarray:
    """Starting states (P, n) from a scalar, a point or one point per path."""
    x = np.atleast_1d(np.asarray(x0, dtype=float))
    if x.ndim == 2 and x.shape == (n_paths, n):
        if not np.all(np.isfinite(x)) or np.any(x < 0.0):
            raise DomainError(f"starting states must lie in [0, inf)^{n}")
        return x.copy()
    if x.size == 1:
        x = np.repeat(x, n)
    if x.shape != (n,):
        raise DomainError(f"x0 must have {n} coordinates, got shape {x.shape}")
    if not np.all(np.isfinite(x)) or np.any(x < 0.0):
        raise DomainError(f"x0 must lie in [0, inf)^{n}, got {x.tolist()}")
    if n_paths < 1:
        raise DomainError(f"n_paths must be >= 1, got {n_paths}")
    return np.broadcast_to(x, (n_paths, n)).copy()


def _per_path(values: np.ndarray):
    return float(values[0]) if values.size == 1 else values


# =========================================================================
# Exact-grid sampler
# =========================================================================
def sample_exact_grid(
    x0,
    grid: TimeGrid,
    params: StickyParams,
    rng: np.random.Generator,
    n_paths: int = 1,
) -> PathSample:
    """
    Markov chaining of the exact kernel sampler over the grid.

    Exact in distribution at every grid time; no noise is recorded.
    """
    x = _start(x0, params.n, n_paths)
    states = np.empty((len(grid), n_paths, params.n))
    states[0] = x
    for k, dt in enumerate(grid.steps):
        states[k + 1] = product_sample(float(dt), states[k], params, rng)
    return PathSample(grid, states, _occupation(states, grid.steps), params.beta)


# =========================================================================
# Time-change sampler
# =========================================================================
def skorokhod_clock(x0: float, increments: np.ndarray, tau: float, beta: float):
    """
    Reflect Y = x0 + sqrt(2) W at 0 and build the additive functional A.

    Args:
        increments: (K, P) Brownian increments of variance tau

    Returns:
        (xhat, L, A), each (K+1, P): X^ = Y + L with
        L_k = max(L_{k-1}, -Y_k), L_0 = 0, and A_k = k tau + beta L_k.
    """
    W = np.concatenate([np.zeros((1, increments.shape[1])), np.cumsum(increments, axis=0)])
    Y = x0 + math.sqrt(2.0) * W
    L = np.maximum.accumulate(np.maximum(-Y, 0.0), axis=0)
    xhat = np.maximum(Y + L, 0.0)
    k = np.arange(W.shape[0], dtype=float)[:, None]
    A = k * tau + beta * L
    return xhat, L, A


def invert_clock(A: np.ndarray, times: np.ndarray) -> np.ndarray:
    """
    Index k with A_k <= t < A_{k+1} per output time and path, shape (len(times), P).

    A must be strictly increasing down each column. Columns are shifted apart
    so one searchsorted over the flattened array serves all paths.
    """
    K1, P = A.shape
    span = float(A[-1].max()) + float(times[-1]) + 1.0
    offsets = span * np.arange(P)
    flat = (A + offsets).T.ravel()
    queries = (times[:, None] + offsets).T.ravel()
    idx = np.searchsorted(flat, queries, side="right") - 1
    local = idx.reshape(P, times.size).T - (np.arange(P) * K1)
    return np.clip(local, 0, K1 - 2)


def _bridge_at(W: np.ndarray, k: np.ndarray, frac: np.ndarray, tau: float, rng) -> np.ndarray:
    """
    Brownian values at internal positions k + frac, shape (len(times), P).

    Drawn output time by output time as bridges between the grid values
    W_k and W_{k+1}; a draw in the same step as the previous one is
    conditioned on it. Positions must be non-decreasing down each column.
    """
    n_out, P = k.shape
    cols = np.arange(P)
    W_u = np.empty((n_out, P))
    prev_pos = np.full(P, -1.0)
    prev_val = np.zeros(P)
    for j in range(n_out):
        left = k[j].astype(float)
        right = left + 1.0
        pos = left + frac[j]
        inside = prev_pos >= left
        a = np.where(inside, prev_pos, left)
        w_a = np.where(inside, prev_val, W[k[j], cols])
        w_b = W[k[j] + 1, cols]
        span = right - a
        lam = np.where(span > 0.0, (pos - a) / np.where(span > 0.0, span, 1.0), 0.0)
        sd = np.sqrt(np.maximum(tau * lam * (right - pos), 0.0))
        W_u[j] = w_a + lam * (w_b - w_a) + sd * rng.standard_normal(P)
        prev_pos, prev_val = pos, W_u[j]
    return W_u


def _timechange_batch(x0, times, tau, K, beta, rng, n_paths):
    increments = rng.normal(0.0, math.sqrt(tau), size=(K, n_paths))
    xhat, L, A = skorokhod_clock(x0, increments, tau, beta)
    k = invert_clock(A, times)
    cols = np.arange(n_paths)[None, :]
    A_k = A[k, cols]
    s = times[:, None] - A_k
    # each internal step: motion over tau, then a pause of beta * dL at 0
    frac = np.clip(s / tau, 0.0, 1.0)
    W = np.concatenate([np.zeros((1, n_paths)), np.cumsum(increments, axis=0)])
    W_u = _bridge_at(W, k, frac, tau, rng)
    moving = np.abs(x0 + math.sqrt(2.0) * W_u + L[k, cols])
    states = np.where(s >= tau, xhat[k + 1, cols], moving)
    paused = np.maximum(s - tau, 0.0)
    local = np.minimum(L[k, cols] + paused / beta, L[k + 1, cols])

    # driving noise read at internal time, plus fresh noise over pauses
    u = (k + frac) * tau
    dt = np.diff(times)[:, None]
    pause_time = np.maximum(dt - np.diff(u, axis=0), 0.0)
    noise = np.diff(W_u, axis=0) + np.sqrt(pause_time) * rng.standard_normal(pause_time.shape)
    return states, local, noise


def sample_timechange(
    x0: float,
    horizon: float,
    dt: float,
    params: StickyParams,
    rng: np.random.Generator,
    n_paths: int = 1,
    times: np.ndarray | None = None,
    batch_size: int = TIMECHANGE_BATCH,
) -> PathSample:
    """
    One-dimensional sticky Brownian motion by random time change.

    The reflecting path X^ runs on an internal grid of step dt; output time
    is A = t + beta L, so X_t = X^(A^{-1}(t)). Each internal step is motion
    followed by a pause of beta * dL at 0, so A is piecewise linear with flat
    pieces of X at 0 where L grows. Output times inside a motion phase read
    W by Brownian-bridge draws between the grid values, keeping the
    quadratic variation of X and of the recorded noise exact.

    Args:
        x0: starting point >= 0
        horizon: final output time
        dt: internal step (also the default output step)
        times: optional output times (strictly increasing, from 0 to horizon)
        batch_size: paths simulated together (bounds memory)

    Returns:
        PathSample with exact noise increments and skorokhod_local_time = L o A^{-1}
    """
    if params.n != 1:
        raise DomainError(f"the time-change sampler is one-dimensional, got n={params.n}")
    if not dt > 0.0 or not horizon > 0.0:
        raise DomainError(f"need dt > 0 and horizon > 0, got ({dt}, {horizon})")
    x0 = float(_start(x0, 1, 1)[0, 0])
    grid = TimeGrid(times) if times is not None else uniform_grid(horizon, max(1, round(horizon / dt)))
    out_times = grid.times
    # A_K >= K dt > final output time
    K = int(math.ceil(out_times[-1] / dt)) + 1

    chunks = []
    remaining = n_paths
    while remaining > 0:
        size = min(batch_size, remaining)
        chunks.append(_timechange_batch(x0, out_times, dt, K, params.beta, rng, size))
        remaining -= size
    states = np.concatenate([c[0] for c in chunks], axis=1)[..., None]
    local = np.concatenate([c[1] for c in chunks], axis=1)[..., None]
    noise = np.concatenate([c[2] for c in chunks], axis=1)[..., None]
    return PathSample(
        grid,
        states,
        _occupation(states, grid.steps),
        params.beta,
        noise=noise,
        noise_exact=True,
        skorokhod_local_time=local,
    )


# =========================================================================
# Splitting integrator for the distorted SDE
# =========================================================================
def sample_euler_distorted(
    x0,
    grid: TimeGrid,
    params: StickyParams,
    model: DensityModel,
    rng: np.random.Generator,
    n_paths: int = 1,
    reflect_at: float | None = None,
) -> PathSample:
    """
    Lie splitting per step: (a) exact sticky step, (b) drift substep
    x_i <- max(0, x_i + 1{x_i > 0} d_i ln rho(x) dt).

    Noise proxies (y - x)/sqrt(2) on interior coordinates are recorded for
    diagnostics with noise_exact=False. With zero drift the RNG consumption
    and the states are identical to sample_exact_grid.

    Args:
        reflect_at: optional upper wall R; states beyond R are folded back

    Raises:
        StepSizeError: dt * |drift| >= 0.5 * min(1, beta) at some step
        DriftOverflowError: the drift is not finite along the path
    """
    if model.n != params.n:
        raise DomainError(f"model dimension {model.n} does not match n={params.n}")
    x = _start(x0, params.n, n_paths)
    limit = STEP_SAFETY * min(1.0, params.beta)
    states = np.empty((len(grid), n_paths, params.n))
    noise = np.empty((len(grid) - 1, n_paths, params.n))
    states[0] = x

    for k, dt in enumerate(grid.steps):
        dt = float(dt)
        current = states[k]
        y = product_sample(dt, current, params, rng)
        with np.errstate(over="ignore", invalid="ignore"):
            drift = model.drift(y)
        if not np.all(np.isfinite(drift)):
            bad = y[np.argmax(~np.all(np.isfinite(drift), axis=-1))]
            raise DriftOverflowError(f"drift of {model.name} overflowed at state {bad.tolist()}, t={grid.times[k]:g}")
        worst = float(np.abs(drift).max()) * dt
        if worst >= limit:
            raise StepSizeError(
                f"step {dt:g} too large at t={grid.times[k]:g}: dt*|drift| = {worst:.3g} >= {limit:.3g}"
            )
        x = np.maximum(y + np.where(y > 0.0, drift, 0.0) * dt, 0.0)
        if reflect_at is not None:
            x = np.where(x > reflect_at, np.abs(2.0 * reflect_at - x), x)
        noise[k] = np.where(current > 0.0, (y - current) / math.sqrt(2.0), 0.0)
        states[k + 1] = x

    return PathSample(
        grid,
        states,
        _occupation(states, grid.steps),
        params.beta,
        noise=noise,
        noise_exact=False,
    )


# =========================================================================
# Ensembles
# =========================================================================
def concat_paths(samples: list[PathSample]) -> PathSample:
    """Stack ensembles drawn on the same grid along the path axis."""
    first = samples[0]

    def stack(name):
        parts = [getattr(s, name) for s in samples]
        return None if parts[0] is None else np.concatenate(parts, axis=1)

    return replace(
        first,
        states=stack("states"),
        boundary_occupation=stack("boundary_occupation"),
        noise=stack("noise"),
        skorokhod_local_time=stack("skorokhod_local_time"),
    )


def simulate_batches(
    sampler: Callable[..., PathSample],
    n_paths: int,
    seed: int,
    batch_size: int = 10_000,
    max_workers: int | None = None,
    **kwargs,
) -> PathSample:
    """
    Run `sampler(rng=..., n_paths=..., **kwargs)` over batches of paths.

    Batch b draws from the b-th child of SeedSequence(seed), so the ensemble
    does not depend on max_workers. Batches are merged in index order.
    """
    sizes = [min(batch_size, n_paths - start) for start in range(0, n_paths, batch_size)]
    rngs = spawn_rngs(seed, len(sizes))
    logger.debug(f"simulating {n_paths} paths in {len(sizes)} batches")

    def run(index: int) -> PathSample:
        return sampler(rng=rngs[index], n_paths=sizes[index], **kwargs)

    if max_workers and max_workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            parts = list(executor.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]
    return concat_paths(parts)


# =========================================================================
# Local time
# =========================================================================
def _check_index(path: PathSample, i: int) -> None:
    if not 0 <= i < path.n:
        raise DomainError(f"component {i} out of range for n={path.n}")


def local_time(path: PathSample, i: int = 0):
    """
    (1/beta) * time spent at 0 by component i up to the horizon.

    Returns a float for a single path, else one value per path.
    """
    _check_index(path, i)
    return _per_path(path.boundary_occupation[-1, :, i] / path.beta)


def epsilon_local_time(path: PathSample, i: int = 0, eps: float = 0.01):
    """(1/eps) * int 1_(0, eps)(X^i_s) ds, left-endpoint rule."""
    _check_index(path, i)
    if eps <= 0.0:
        raise DomainError(f"eps must be positive, got {eps}")
    x = path.states[:-1, :, i]
    inside = (x > 0.0) & (x < eps)
    return _per_path(np.sum(path.grid.steps[:, None] * inside, axis=0) / eps)
