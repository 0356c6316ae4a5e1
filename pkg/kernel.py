# kernel.py
"""
Transition and resolvent kernels of sticky Brownian motion on [0, inf).

The process solves dX = 1_(0,inf)(X) sqrt(2) dB + (1/beta) 1_{0}(X) dt.
Its kernel is the unit-variance sticky kernel transported by X = sqrt(2) Y
with stickiness gamma = sqrt(2) beta:

    p_t(x, dy) = density(t, x, y) dy + atom(t, x) delta_0(dy)
    density(t, x, y) = dirichlet_heat(t, x/s2, y/s2) / s2 + s2 * g(t, (x+y)/s2; s2 beta)
    atom(t, x)       = s2 beta * g(t, x/s2; s2 beta)              (s2 = sqrt 2)

Integrating the density in closed form gives the survival function

    P_x(X_t > y) = (erfc((y-x)/(2 sqrt t)) + erfc((y+x)/(2 sqrt t))) / 2 - atom(t, x+y)

which is what the sampler inverts. The unscaled variant (arguments not divided
by s2, factor 2 on g) is available behind printed=True for comparison; it is
neither normalised nor symmetric.
"""

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import special

from errors import DomainError
from mathcore import (
    SQRT2,
    _as_array,
    _dirichlet_heat,
    _dirichlet_resolvent,
    _out,
    _require_nonnegative,
    _require_positive,
    _sticky_g,
    quad_checked,
)

# Survival beyond x + TAIL_WIDTH*sqrt(t) is below erfc(6) ~ 2e-17
TAIL_WIDTH = 12.0
SAMPLER_TOL = 1e-12


class StickyParams(BaseModel):
    """Stickiness beta > 0 and dimension n >= 1 of the product process."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    beta: float = Field(gt=0, allow_inf_nan=False)
    n: int = Field(default=1, ge=1)


@dataclass(frozen=True)
class KernelDecomposition:
    """p_t(x, .) split into its atom at 0 and its density on (0, inf)."""

    atom: float
    density: Callable[[float], float]


# =========================================================================
# Unchecked evaluations (inputs already validated, arrays broadcast)
# =========================================================================
def _atom(t, x, beta):
    gamma = SQRT2 * beta
    return gamma * _sticky_g(t, x / SQRT2, gamma)


def _density(t, x, y, beta):
    gamma = SQRT2 * beta
    return _dirichlet_heat(t, x / SQRT2, y / SQRT2) / SQRT2 + SQRT2 * _sticky_g(t, (x + y) / SQRT2, gamma)


def _survival(t, x, y, beta):
    w = 2.0 * np.sqrt(t)
    return 0.5 * special.erfc((y - x) / w) + 0.5 * special.erfc((y + x) / w) - _atom(t, x + y, beta)


def _printed_atom(t, x, beta):
    gamma = SQRT2 * beta
    return gamma * _sticky_g(t, x, gamma)


def _printed_density(t, x, y, beta):
    gamma = SQRT2 * beta
    return _dirichlet_heat(t, x, y / SQRT2) / SQRT2 + 2.0 * _sticky_g(t, x + y / SQRT2, gamma)


def _tail_cutoff(t: float, x: float) -> float:
    return x + TAIL_WIDTH * math.sqrt(t)


# =========================================================================
# Transition kernel
# =========================================================================
def transition_atom(t, x, params: StickyParams, printed: bool = False):
    """
    Probability mass p_t(x, {0}).

    At x = 0 this reduces to exp(t/beta^2) erfc(sqrt(t)/beta), and
    transition_atom(t, x) == beta * transition_density(t, 0, x).
    """
    t_ = _require_positive("t", t)
    x_ = _require_nonnegative("x", x)
    fn = _printed_atom if printed else _atom
    return _out(fn(t_, x_, params.beta), t, x)


def transition_density(t, x, y, params: StickyParams, printed: bool = False):
    """Density of p_t(x, dy) on (0, inf); symmetric in (x, y)."""
    t_ = _require_positive("t", t)
    x_ = _require_nonnegative("x", x)
    y_ = _require_nonnegative("y", y)
    fn = _printed_density if printed else _density
    return _out(fn(t_, x_, y_, params.beta), t, x, y)


def transition_survival(t, x, y, params: StickyParams):
    """P_x(X_t > y) for y >= 0, in closed form."""
    t_ = _require_positive("t", t)
    x_ = _require_nonnegative("x", x)
    y_ = _require_nonnegative("y", y)
    return _out(_survival(t_, x_, y_, params.beta), t, x, y)


def transition_cdf(t, x, y, params: StickyParams):
    """
    P_x(X_t <= y): atom * 1_{y >= 0} plus the integrated density on (0, y].

    Right-continuous and non-decreasing in y; y = +inf gives exactly 1.
    """
    t_ = _require_positive("t", t)
    x_ = _require_nonnegative("x", x)
    y_ = np.asarray(y, dtype=float)
    if np.any(np.isnan(y_)):
        raise DomainError(f"y must not be NaN, got {y!r}")
    y_safe = np.where(np.isfinite(y_) & (y_ > 0.0), y_, 0.0)
    cdf = 1.0 - _survival(t_, x_, y_safe, params.beta)
    cdf = np.where(y_ < 0.0, 0.0, np.where(np.isposinf(y_), 1.0, cdf))
    return _out(np.clip(cdf, 0.0, 1.0), t, x, y)


def transition_decomposition(t: float, x: float, params: StickyParams) -> KernelDecomposition:
    """Bundle atom and density of p_t(x, .)."""
    atom = transition_atom(t, x, params)
    return KernelDecomposition(atom=atom, density=lambda y: transition_density(t, x, y, params))


def transition_mass(t: float, x: float, params: StickyParams) -> float:
    """
    atom + int_0^inf density, by adaptive quadrature split at the kink y = x.

    The integral is truncated at x + 12 sqrt(t); the neglected survival is
    below erfc(6) ~ 2e-17.

    Raises:
        QuadratureError: with the achieved error estimate
    """
    t_ = float(_require_positive("t", t))
    x_ = float(_require_nonnegative("x", x))
    beta = params.beta
    value, _ = quad_checked(
        lambda y: _density(t_, x_, y, beta),
        0.0,
        _tail_cutoff(t_, x_),
        breakpoints=(x_,),
    )
    return float(_atom(t_, x_, beta)) + value


def expectation(
    f: Callable[[float], float],
    t: float,
    x: float,
    params: StickyParams,
    breakpoints: Iterable[float] = (),
    upper: float | None = None,
) -> float:
    """
    p_t f(x) = f(0) * atom + int_0^inf f(y) density(t, x, y) dy.

    Args:
        f: bounded function on [0, inf) (scalar in, scalar out)
        breakpoints: discontinuities or kinks of f
        upper: optional truncation; defaults to x + 12 sqrt(t)
    """
    t_ = float(_require_positive("t", t))
    x_ = float(_require_nonnegative("x", x))
    beta = params.beta
    cutoff = _tail_cutoff(t_, x_) if upper is None else float(upper)
    value, _ = quad_checked(
        lambda y: f(y) * _density(t_, x_, y, beta),
        0.0,
        cutoff,
        breakpoints=(x_, *breakpoints),
    )
    return float(f(0.0)) * float(_atom(t_, x_, beta)) + value


# =========================================================================
# Exact sampling
# =========================================================================
def _invert_survival(t: float, x: np.ndarray, beta: float, v: np.ndarray, tol: float = SAMPLER_TOL) -> np.ndarray:
    """
    Solve survival(y) = v for y > 0, elementwise.

    Bracketed Newton iteration: the bracket [lo, hi] always satisfies
    survival(lo) >= v >= survival(hi); steps leaving it fall back to bisection.
    """
    w = 2.0 * math.sqrt(t)
    lo = np.zeros_like(x)
    # survival(y) <= erfc((y - x)/w), so hi is a valid upper end
    hi = x + w * special.erfcinv(v)
    # free Gaussian inverse as the starting point
    y = np.clip(x + w * special.erfcinv(2.0 * v), lo, hi)

    out = np.empty_like(x)
    active = np.arange(x.size)
    for _ in range(200):
        xa, va, ya = x[active], v[active], y[active]
        gap = _survival(t, xa, ya, beta) - va
        lo_a = np.where(gap > 0.0, ya, lo[active])
        hi_a = np.where(gap > 0.0, hi[active], ya)
        with np.errstate(divide="ignore", invalid="ignore"):
            y_new = ya + gap / _density(t, xa, ya, beta)
        bisect = ~np.isfinite(y_new) | (y_new <= lo_a) | (y_new >= hi_a)
        y_new = np.where(bisect, 0.5 * (lo_a + hi_a), y_new)
        done = (np.abs(y_new - ya) <= tol) | (hi_a - lo_a <= tol)

        out[active[done]] = y_new[done]
        keep = ~done
        lo[active], hi[active], y[active] = lo_a, hi_a, y_new
        active = active[keep]
        if active.size == 0:
            return out
    out[active] = y[active]
    return out


def sample_transition(t: float, x, params: StickyParams, rng: np.random.Generator):
    """
    Draw X_t given X_0 = x, exactly in distribution up to 1e-12 in y.

    One uniform u per element: u < atom returns exactly 0, otherwise y solves
    P_x(X_t > y) = 1 - u. Accepts a scalar or an array of starting points.
    """
    if not isinstance(rng, np.random.Generator):
        raise DomainError(f"rng must be a numpy Generator, got {type(rng).__name__}")
    t_ = float(_require_positive("t", t))
    x_ = np.atleast_1d(_require_nonnegative("x", x)).astype(float)
    flat = x_.ravel()
    u = rng.random(flat.shape)
    y = np.zeros_like(flat)
    moving = u >= _atom(t_, flat, params.beta)
    if np.any(moving):
        y[moving] = _invert_survival(t_, flat[moving], params.beta, 1.0 - u[moving])
    if np.ndim(x) == 0:
        return float(y[0])
    return y.reshape(np.shape(x))


def product_sample(t: float, x, params: StickyParams, rng: np.random.Generator) -> np.ndarray:
    """
    Independent componentwise draws of the n-dimensional product process.

    Args:
        x: array whose last axis has length params.n (batches allowed)
    """
    x_ = _as_array("x", x)
    if x_.ndim == 0 or x_.shape[-1] != params.n:
        raise DomainError(f"expected points with {params.n} coordinates, got shape {x_.shape}")
    return np.asarray(sample_transition(t, x_, params, rng), dtype=float).reshape(x_.shape)


# =========================================================================
# Resolvent kernel
# =========================================================================
def resolvent_atom(lam, x, params: StickyParams):
    """r_lambda(x, {0}) = beta exp(-sqrt(lambda) x) / (sqrt(lambda) + beta lambda)."""
    l_ = _require_positive("lambda", lam)
    x_ = _require_nonnegative("x", x)
    root = np.sqrt(l_)
    return _out(params.beta * np.exp(-root * x_) / (root + params.beta * l_), lam, x)


def resolvent_density(lam, x, y, params: StickyParams):
    """Density of r_lambda(x, dy) on (0, inf), the Laplace transform of transition_density."""
    l_ = _require_positive("lambda", lam)
    x_ = _require_nonnegative("x", x)
    y_ = _require_nonnegative("y", y)
    root = np.sqrt(l_)
    value = _dirichlet_resolvent(l_, x_ / SQRT2, y_ / SQRT2) / SQRT2 + np.exp(-root * (x_ + y_)) / (
        root + params.beta * l_
    )
    return _out(value, lam, x, y)


# =========================================================================
# Semigroup property
# =========================================================================
def chapman_kolmogorov_residual(s: float, t: float, x: float, params: StickyParams, grid: Iterable[float]) -> float:
    """
    sup-distance between p_{s+t}(x, .) and the composition int p_s(x, dz) p_t(z, .).

    The atom at 0 and the density at every positive y of the grid are
    compared; the z-integral is atom_s(x) * kernel_t(0, .) plus quadrature over
    (0, inf) split at z = x and z = y.
    """
    s_ = float(_require_positive("s", s))
    t_ = float(_require_positive("t", t))
    x_ = float(_require_nonnegative("x", x))
    beta = params.beta
    upper = _tail_cutoff(s_, x_)
    atom_s = float(_atom(s_, x_, beta))

    composed_atom, _ = quad_checked(lambda z: _density(s_, x_, z, beta) * _atom(t_, z, beta), 0.0, upper, (x_,))
    composed_atom += atom_s * float(_atom(t_, 0.0, beta))
    residual = abs(float(_atom(s_ + t_, x_, beta)) - composed_atom)

    for y in grid:
        y = float(y)
        if y <= 0.0:
            continue
        integral, _ = quad_checked(
            lambda z: _density(s_, x_, z, beta) * _density(t_, z, y, beta), 0.0, upper, (x_, y)
        )
        composed = atom_s * float(_density(t_, 0.0, y, beta)) + integral
        residual = max(residual, abs(float(_density(s_ + t_, x_, y, beta)) - composed))
    return residual

