# girsanov.py
"""
Girsanov weights turning sticky Brownian paths into paths of the distorted
process with stationary density rho = phi^2 = exp(-2H).

    Z_t = exp(M_t - <M>_t / 2),   M_t = sqrt(2) sum_i int d_i ln phi(X) 1{X^i > 0} dB^i

By Ito's formula the exponent equals

    H(X_0) - H(X_t)                                          endpoint term
    + (1/beta) sum_i int d_i H(X) 1{X^i = 0} ds              boundary term
    + sum_i int (d_i^2 H - (d_i H)^2)(X) 1{X^i > 0} ds       bulk term

which needs no driving noise and is the default. Both forms use
left-endpoint Riemann sums on the path grid.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from errors import DomainError, MissingNoiseError, ModelError, QuadratureError
from kernel import StickyParams
from mathcore import _dirichlet_resolvent, SQRT2, quad_checked
from models import DensityModel
from paths import PathSample, sample_exact_grid, uniform_grid

logger = logging.getLogger(__name__)

MIN_PATHS = 100
DEFAULT_STEPS = 200


@dataclass(frozen=True)
class LogWeight:
    """Per-path parts of ln Z_t, each of shape (P,)."""

    endpoint_term: np.ndarray
    boundary_term: np.ndarray
    bulk_term: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.endpoint_term + self.boundary_term + self.bulk_term

    def weights(self) -> np.ndarray:
        return np.exp(self.total)


class WeightedEstimate(NamedTuple):
    estimate: float
    stderr: float
    ess: float


# =========================================================================
# Log weights
# =========================================================================
def logweight_ito(path: PathSample, model: DensityModel) -> LogWeight:
    """
    Ito-reduced log weight on every path of the ensemble.

    Raises:
        ModelError: H or its derivatives are not finite at a visited state
    """
    if model.n != path.n:
        raise DomainError(f"model dimension {model.n} does not match path dimension {path.n}")
    X = path.states
    left = X[:-1]
    dt = path.grid.steps[:, None, None]
    H0 = model.checked(model.H, X[0], "H")
    Ht = model.checked(model.H, X[-1], "H")
    grad = model.checked(model.gradH, left, "gradient")
    lap = model.checked(model.laplacianDiagH, left, "Hessian diagonal")

    at_zero = left == 0.0
    boundary = np.sum(np.where(at_zero, grad, 0.0) * dt, axis=(0, 2)) / path.beta
    bulk = np.sum(np.where(at_zero, 0.0, lap - grad * grad) * dt, axis=(0, 2))
    return LogWeight(endpoint_term=H0 - Ht, boundary_term=boundary, bulk_term=bulk)


def logweight_integral(path: PathSample, model: DensityModel):
    """
    Stochastic-integral form M_t - <M>_t / 2 from the recorded noise.

    Raises:
        MissingNoiseError: the path carries no driving increments
    """
    if path.noise is None:
        raise MissingNoiseError("logweight_integral needs a path with recorded noise")
    left = path.states[:-1]
    dt = path.grid.steps[:, None, None]
    score = -model.checked(model.gradH, left, "gradient")
    interior = left > 0.0
    martingale = SQRT2 * np.sum(np.where(interior, score * path.noise, 0.0), axis=(0, 2))
    bracket = np.sum(np.where(interior, score * score, 0.0) * dt, axis=(0, 2))
    total = martingale - bracket
    return float(total[0]) if total.size == 1 else total


# =========================================================================
# Weighted Monte Carlo
# =========================================================================
def _weighted_stats(z: np.ndarray, values: np.ndarray) -> WeightedEstimate:
    sample = z * values
    m = sample.size
    stderr = float(np.std(sample, ddof=1) / math.sqrt(m))
    ess = float(np.sum(z) ** 2 / np.sum(z * z))
    return WeightedEstimate(float(np.mean(sample)), stderr, ess)


def _weighted_ensemble(t, x0, model, params, n_paths, rng, n_steps):
    if n_paths < MIN_PATHS:
        raise DomainError(f"weighted estimators need at least {MIN_PATHS} paths, got {n_paths}")
    path = sample_exact_grid(x0, uniform_grid(t, n_steps), params, rng, n_paths=n_paths)
    return path, logweight_ito(path, model).weights()


def weighted_expectation(
    f: Callable[[np.ndarray], np.ndarray],
    t: float,
    x0,
    model: DensityModel,
    params: StickyParams,
    n_paths: int,
    rng: np.random.Generator,
    n_steps: int = DEFAULT_STEPS,
) -> WeightedEstimate:
    """
    Estimate the distorted semigroup p_t f(x0) = E_x0[Z_t f(X_t)].

    Args:
        f: vectorised, (P, n) final states -> (P,) values
        n_steps: grid steps for the Riemann sums of the weight

    Returns:
        (estimate, stderr, ess); not self-normalised, so E[Z] = 1 stays testable.

    Example:
        f = 1 estimates E[Z_t] and must come out as 1 within 3 stderr.
    """
    path, z = _weighted_ensemble(t, x0, model, params, n_paths, rng, n_steps)
    values = np.asarray(f(path.final()), dtype=float).reshape(-1)
    return _weighted_stats(z, values)


def weight_moment(
    t: float,
    x0,
    model: DensityModel,
    params: StickyParams,
    p: float,
    n_paths: int,
    rng: np.random.Generator,
    n_steps: int = DEFAULT_STEPS,
) -> WeightedEstimate:
    """Monte Carlo E_x0[Z_t^p]."""
    path, z = _weighted_ensemble(t, x0, model, params, n_paths, rng, n_steps)
    return _weighted_stats(z**p, np.ones(path.n_paths))


# =========================================================================
# Tail control
# =========================================================================
def tail_bound_C(k: float, d: float, t: float, n: int) -> float:
    """
    C(k) = n sqrt(t / 2 pi) * 4 / (k - d) * exp(-(k - d)^2 / (2t)).

    Example:
        tail_bound_C(3, 1, 1, 1) = sqrt(1 / 2 pi) * 2 * e^-2 ~ 0.10798
    """
    if not k > d or d < 0.0 or t <= 0.0 or n < 1:
        raise DomainError(f"need k > d >= 0, t > 0, n >= 1, got (k={k}, d={d}, t={t}, n={n})")
    gap = k - d
    return n * math.sqrt(t / (2.0 * math.pi)) * 4.0 / gap * math.exp(-gap * gap / (2.0 * t))


def _box_upper(D, n: int) -> np.ndarray:
    upper = np.broadcast_to(np.asarray(D, dtype=float), (n,)).copy()
    if np.any(upper <= 0.0) or not np.all(np.isfinite(upper)):
        raise DomainError(f"box bound must be positive, got {upper.tolist()}")
    return upper


def _probe_points(upper: np.ndarray) -> list[np.ndarray]:
    corners = [np.array(c) for c in itertools.product(*[(0.0, u) for u in upper])]
    return corners + [upper / 2.0]


def truncated_weight_probe(
    t: float,
    D: float | Sequence[float],
    k: float,
    model: DensityModel,
    params: StickyParams,
    n_paths: int,
    rng: np.random.Generator,
    n_steps: int = 100,
) -> float:
    """
    max over corners and centre x of D of E_x[1{tau_k <= t} Z_t].

    tau_k is the first grid time any component reaches k.
    """
    upper = _box_upper(D, model.n)
    if not k > upper.max():
        raise DomainError(f"k={k} must exceed the box bound {upper.max()}")
    best = 0.0
    for x in _probe_points(upper):
        path, z = _weighted_ensemble(t, x, model, params, n_paths, rng, n_steps)
        exited = np.any(path.states >= k, axis=(0, 2))
        best = max(best, float(np.mean(exited * z)))
    return best


def holder_bound(
    t: float,
    D: float | Sequence[float],
    k: float,
    model: DensityModel,
    params: StickyParams,
    p: float = 2.0,
    resolution: int = 11,
) -> float:
    """
    exp(p (sup_D H + K1 + n K2 t / beta + n K3 t))^(1/p) * C(k)^(1/q), 1/p + 1/q = 1.
    """
    if model.bounds is None:
        raise ModelError(f"model {model.name} declares no bounds")
    if p <= 1.0:
        raise DomainError(f"Hoelder exponent must exceed 1, got {p}")
    upper = _box_upper(D, model.n)
    axes = [np.linspace(0.0, u, resolution) for u in upper]
    points = np.array(list(itertools.product(*axes)))
    sup_H = float(np.max(model.checked(model.H, points, "H")))
    K, n = model.bounds, model.n
    exponent = sup_H + K.K1 + n * K.K2 * t / params.beta + n * K.K3 * t
    q = p / (p - 1.0)
    return math.exp(exponent) * tail_bound_C(k, float(upper.max()), t, n) ** (1.0 / q)


# =========================================================================
# Kato potential (n = 1)
# =========================================================================
def kato_potential(
    lam: float,
    x: float,
    model: DensityModel,
    params: StickyParams,
    breakpoints: Sequence[float] = (),
) -> float:
    """
    int r_lambda(x, dy) 2 (d ln phi)^2(y) 1{y > 0}, by quadrature.

    breakpoints: kinks of the energy density (e.g. the edges of a drift support)

    Only the density part of the resolvent contributes (the energy measure
    does not charge 0). A divergent integral is reported as +inf.
    """
    if model.n != 1:
        raise DomainError(f"kato_potential is one-dimensional, got n={model.n}")
    if lam <= 0.0 or x < 0.0:
        raise DomainError(f"need lambda > 0 and x >= 0, got ({lam}, {x})")
    root = math.sqrt(lam)

    def integrand(y: float) -> float:
        grad = float(model.gradH(np.array([y]))[0])
        density = _dirichlet_resolvent(lam, x / SQRT2, y / SQRT2) / SQRT2 + math.exp(-root * (x + y)) / (
            root + params.beta * lam
        )
        return 2.0 * grad * grad * density

    try:
        with np.errstate(over="raise", invalid="raise"):
            value, err = quad_checked(integrand, 0.0, math.inf, breakpoints=(x, *breakpoints), epsrel=1e-10)
    except (QuadratureError, FloatingPointError, OverflowError) as e:
        logger.warning(f"✗ Kato potential of {model.name} at lambda={lam:g}, x={x:g} diverged: {e}")
        return math.inf
    if not math.isfinite(value):
        logger.warning(f"✗ Kato potential of {model.name} at lambda={lam:g}, x={x:g} is not finite")
        return math.inf
    logger.debug(f"Kato potential {value:.6g} (error estimate {err:.2e})")
    return value


def gaussian_kato_closed_form(lam: float, x: float, beta: float) -> float:
    """Kato potential of the Gaussian model phi = exp(-x^2 / 2)."""
    if lam <= 0.0 or x < 0.0 or beta <= 0.0:
        raise DomainError(f"need lambda > 0, x >= 0, beta > 0, got ({lam}, {x}, {beta})")
    decay = math.exp(-math.sqrt(lam) * x)
    return 2.0 * x * x / lam + 4.0 * (1.0 - decay) / lam**2 + 4.0 * decay / (lam**2 + beta * lam**2.5)
