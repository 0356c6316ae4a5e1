# measure.py
"""
Quadrature against the product measure mu_n = prod_i (dx_i + beta delta_0)
on [0, inf)^n and the stationary expectation of a density model.

Expanding the product splits mu_n into 2^n strata: for every subset B of
free coordinates the stratum carries weight beta^(n - #B) times Lebesgue
measure on the B-coordinates, all others pinned to 0. Each stratum is
integrated with a Gauss-Legendre tensor rule on (0, R]^#B.
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import special

from errors import DegenerateMeasureError, DomainError
from models import DensityModel

logger = logging.getLogger(__name__)

MAX_DIMENSION = 12
DEGENERATE_FLOOR = 1e-300
# points evaluated per call of the integrand
CHUNK_POINTS = 1 << 18


class ProductMeasureSpec(BaseModel):
    """Dimension, stickiness, truncation bound R and 1D nodes per stratum axis."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n: int = Field(ge=1, le=MAX_DIMENSION)
    beta: float = Field(gt=0, allow_inf_nan=False)
    R: float = Field(gt=0, allow_inf_nan=False)
    resolution: int = Field(default=64, ge=2)


@dataclass(frozen=True)
class Stratum:
    """Free coordinates B (0-based) and weight beta^(n - #B)."""

    free: tuple[int, ...]
    weight: float


def strata(spec: ProductMeasureSpec) -> list[Stratum]:
    """All 2^n strata, by size of B, then lexicographically."""
    out = []
    for size in range(spec.n + 1):
        for free in itertools.combinations(range(spec.n), size):
            out.append(Stratum(free=free, weight=spec.beta ** (spec.n - size)))
    return out


def _stratum_integral(f: Callable[[np.ndarray], np.ndarray], stratum: Stratum, spec: ProductMeasureSpec) -> float:
    k = len(stratum.free)
    if k == 0:
        values = np.atleast_1d(np.asarray(f(np.zeros((1, spec.n))), dtype=float))
        if not np.all(np.isfinite(values)):
            raise DomainError("integrand is not finite at the origin")
        return stratum.weight * float(values[0])

    nodes, weights = np.polynomial.legendre.leggauss(spec.resolution)
    nodes = 0.5 * spec.R * (nodes + 1.0)
    weights = 0.5 * spec.R * weights

    total = 0.0
    free = list(stratum.free)
    index_grid = itertools.product(range(spec.resolution), repeat=k)
    while True:
        block = np.array(list(itertools.islice(index_grid, CHUNK_POINTS)), dtype=int).reshape(-1, k)
        if block.size == 0:
            break
        points = np.zeros((block.shape[0], spec.n))
        points[:, free] = nodes[block]
        values = np.asarray(f(points), dtype=float)
        if not np.all(np.isfinite(values)):
            bad = points[np.argmax(~np.isfinite(values))]
            raise DomainError(f"integrand is not finite at {bad.tolist()}")
        total += float(np.dot(values, np.prod(weights[block], axis=1)))
    return stratum.weight * total


def integrate_mu(
    f: Callable[[np.ndarray], np.ndarray],
    spec: ProductMeasureSpec,
    max_workers: int | None = None,
) -> float:
    """
    int f d mu_n over the truncated box [0, R]^n.

    Args:
        f: vectorised integrand, (m, n) points -> (m,) values
        spec: measure and quadrature parameters
        max_workers: threads for concurrent strata (None or 1 runs serially)

    Returns:
        Sum of the stratum integrals in strata() order.

    Example:
        n=2, beta=2, f=1, R=1 -> (1 + 2)^2 = 9
    """
    parts = strata(spec)
    logger.debug(f"integrating over {len(parts)} strata, {spec.resolution} nodes per axis")
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            values = list(executor.map(lambda s: _stratum_integral(f, s, spec), parts))
    else:
        values = [_stratum_integral(f, s, spec) for s in parts]
    return math.fsum(values)


def stationary_expectation(
    F: Callable[[np.ndarray], np.ndarray],
    rho: DensityModel,
    spec: ProductMeasureSpec,
    max_workers: int | None = None,
) -> float:
    """
    int F rho d mu_n / int rho d mu_n.

    Raises:
        DegenerateMeasureError: the normalising integral is below 1e-300
    """
    if rho.n != spec.n:
        raise DomainError(f"model dimension {rho.n} does not match measure dimension {spec.n}")
    denominator = integrate_mu(rho.rho, spec, max_workers)
    if not denominator > DEGENERATE_FLOOR:
        raise DegenerateMeasureError(f"normalising integral {denominator!r} of {rho.name} vanished")
    numerator = integrate_mu(lambda x: np.asarray(F(x), dtype=float) * rho.rho(x), spec, max_workers)
    return numerator / denominator


def gaussian_tail_radius(scale: float, tol: float = 1e-12) -> float:
    """
    R with int_R^inf exp(-y^2 / scale^2) dy / int_0^inf (...) = erfc(R / scale) <= tol.

    For rho = exp(-|x|^2) use scale = 1.
    """
    if scale <= 0.0 or not 0.0 < tol < 1.0:
        raise DomainError(f"need scale > 0 and 0 < tol < 1, got ({scale}, {tol})")
    return float(scale * special.erfcinv(tol))


def wetting_tail_radius(n: int, c_minus: float, tol: float = 1e-12) -> float:
    """
    Truncation bound for a wetting model with pair curvature >= c_minus.

    rho = exp(-2H) decays at least like exp(-c_minus mu x^2 / 2) along the
    weakest direction, mu = 2 - 2 cos(pi / (n + 1)) being the smallest
    eigenvalue of the pinned discrete Laplacian.
    """
    if c_minus <= 0.0:
        raise DomainError(f"pair curvature lower bound must be positive, got {c_minus}")
    mu = 2.0 - 2.0 * math.cos(math.pi / (n + 1))
    return gaussian_tail_radius(math.sqrt(2.0 / (c_minus * mu)), tol)
