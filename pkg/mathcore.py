# mathcore.py
"""
Scalar special functions and closed-form heat/resolvent densities.

Every other module composes these. All functions accept floats or numpy
arrays (broadcasting like ufuncs) and return a float for scalar input.
Arguments are validated; domain violations raise DomainError.

Conventions:
    gauss_heat(t, x, y)          = (2 pi t)^(-1/2) exp(-(x-y)^2 / (2t))
    dirichlet_heat(t, x, y)      = gauss_heat(t, x, y) - gauss_heat(t, x, -y)
    sticky_g(t, x, gamma)        = (1/gamma) exp(2x/gamma + 2t/gamma^2)
                                   * erfc(x/sqrt(2t) + sqrt(2t)/gamma)
    dirichlet_resolvent(l, x, y) = (2l)^(-1/2) (exp(-sqrt(2l)|x-y|) - exp(-sqrt(2l)(x+y)))
"""

import math
from typing import Callable, Iterable

import numpy as np
from scipy import integrate, special

from errors import DomainError, QuadratureError

SQRT2 = math.sqrt(2.0)
SQRT_PI = math.sqrt(math.pi)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


# =========================================================================
# Argument handling
# =========================================================================
def _as_array(name: str, value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return arr


def _require_positive(name: str, value) -> np.ndarray:
    arr = _as_array(name, value)
    if np.any(arr <= 0.0):
        raise DomainError(f"{name} must be strictly positive, got {value!r}")
    return arr


def _require_nonnegative(name: str, value) -> np.ndarray:
    arr = _as_array(name, value)
    if np.any(arr < 0.0):
        raise DomainError(f"{name} must be non-negative, got {value!r}")
    return arr


def _out(value: np.ndarray, *inputs) -> float | np.ndarray:
    """Return a python float when every input was a scalar."""
    if all(np.ndim(v) == 0 for v in inputs):
        return float(value)
    return value


# =========================================================================
# Error functions
# =========================================================================
def erfc(x):
    """Complementary error function, erfc(x) = 2/sqrt(pi) * int_x^inf exp(-z^2) dz."""
    arr = _as_array("x", x)
    return _out(special.erfc(arr), x)


def erfcx(x):
    """
    Scaled complementary error function exp(x^2) * erfc(x).

    Stays finite for large positive x where exp(x^2) alone overflows; this is
    what makes sticky_g safe to evaluate far from the boundary.
    """
    arr = _as_array("x", x)
    return _out(special.erfcx(arr), x)


def erfc_bounds(x):
    """
    Sandwich bounds for erfc on x >= 0:

        (2/sqrt(pi)) exp(-x^2) / (x + sqrt(x^2 + 2)) < erfc(x) <= (2/sqrt(pi)) exp(-x^2) / (x + sqrt(x^2 + 4/pi))

    Without the 2/sqrt(pi) factor these bound int_x^inf exp(-z^2) dz instead.

    Returns:
        (lower, upper), each of the shape of x
    """
    arr = _require_nonnegative("x", x)
    gauss = 2.0 / SQRT_PI * np.exp(-arr * arr)
    lower = gauss / (arr + np.sqrt(arr * arr + 2.0))
    upper = gauss / (arr + np.sqrt(arr * arr + 4.0 / math.pi))
    return _out(lower, x), _out(upper, x)


# =========================================================================
# Heat and resolvent densities
# =========================================================================
def _gauss_heat(t, x, y):
    return INV_SQRT_2PI / np.sqrt(t) * np.exp(-((x - y) ** 2) / (2.0 * t))


def _dirichlet_heat(t, x, y):
    # p(t,x,y) - p(t,x,-y) = p(t,x,y) * (1 - exp(-2xy/t)); expm1 keeps the
    # difference accurate when x*y/t is small.
    return _gauss_heat(t, x, y) * -np.expm1(-2.0 * x * y / t)


def _sticky_g(t, x, gamma):
    # exp(2x/g + 2t/g^2) * erfc(z) = exp(-x^2/(2t)) * erfcx(z) with
    # z = x/sqrt(2t) + sqrt(2t)/g, because z^2 = x^2/(2t) + 2x/g + 2t/g^2.
    s = np.sqrt(2.0 * t)
    z = x / s + s / gamma
    return np.exp(-(x * x) / (2.0 * t)) * special.erfcx(z) / gamma


def _dirichlet_resolvent(lam, x, y):
    a = np.sqrt(2.0 * lam)
    return np.exp(-a * np.abs(x - y)) * -np.expm1(-2.0 * a * np.minimum(x, y)) / a


def gauss_heat(t, x, y):
    """Free heat kernel (2 pi t)^(-1/2) exp(-(x-y)^2/(2t)); symmetric in (x, y)."""
    t_ = _require_positive("t", t)
    x_ = _as_array("x", x)
    y_ = _as_array("y", y)
    return _out(_gauss_heat(t_, x_, y_), t, x, y)


def dirichlet_heat(t, x, y):
    """Heat kernel on (0, inf) killed at 0: p(t,x,y) - p(t,x,-y)."""
    t_ = _require_positive("t", t)
    x_ = _require_nonnegative("x", x)
    y_ = _require_nonnegative("y", y)
    return _out(_dirichlet_heat(t_, x_, y_), t, x, y)


def sticky_g(t, x, gamma):
    """
    The sticky correction g_{0,gamma}(t, x) of the sticky transition kernel.

    Evaluated through erfcx, so no intermediate overflow occurs for x and t
    up to 1e6.

    Args:
        t: time > 0
        x: position >= 0
        gamma: stickiness scale > 0
    """
    t_ = _require_positive("t", t)
    x_ = _require_nonnegative("x", x)
    g_ = _require_positive("gamma", gamma)
    return _out(_sticky_g(t_, x_, g_), t, x, gamma)


def dirichlet_resolvent(lam, x, y):
    """Resolvent density of Brownian motion killed at 0 (generator f''/2)."""
    l_ = _require_positive("lambda", lam)
    x_ = _require_nonnegative("x", x)
    y_ = _require_nonnegative("y", y)
    return _out(_dirichlet_resolvent(l_, x_, y_), lam, x, y)


# =========================================================================
# Quadrature and smooth cutoffs
# =========================================================================
def quad_checked(
    func: Callable[[float], float],
    a: float,
    b: float,
    breakpoints: Iterable[float] = (),
    epsabs: float = 1e-13,
    epsrel: float = 1e-11,
    limit: int = 200,
) -> tuple[float, float]:
    """
    Adaptive Gauss-Kronrod quadrature split at the given breakpoints.

    Args:
        func: scalar integrand
        a, b: integration limits (b may be +inf)
        breakpoints: kinks of the integrand inside (a, b)
        epsabs, epsrel: tolerances handed to QUADPACK per segment

    Returns:
        (value, error_estimate)

    Raises:
        QuadratureError: a segment did not converge to tolerance
    """
    nodes = sorted({float(p) for p in breakpoints if a < p < b})
    edges = [a, *nodes, b]
    total = 0.0
    total_err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        result = integrate.quad(func, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=limit, full_output=1)
        value, err = result[0], result[1]
        # A fourth element is QUADPACK's warning message (ier > 0)
        if len(result) > 3 and err > 100.0 * max(epsabs, epsrel * abs(value)):
            raise QuadratureError(f"quadrature on [{lo:g}, {hi:g}] did not converge", err)
        total += value
        total_err += err
    return total, total_err


def smoothstep(s):
    """Quintic smoothstep 6s^5 - 15s^4 + 10s^3 clipped to [0, 1]; C^2 at both ends."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    return s * s * s * (s * (6.0 * s - 15.0) + 10.0)


def smooth_cutoff(y, inner: float = 1.0, outer: float = 2.0):
    """C^2 cutoff: 1 on [0, inner], 0 on [outer, inf)."""
    if not 0.0 < inner < outer:
        raise DomainError(f"cutoff needs 0 < inner < outer, got ({inner}, {outer})")
    y_ = np.asarray(y, dtype=float)
    return _out(1.0 - smoothstep((y_ - inner) / (outer - inner)), y)
