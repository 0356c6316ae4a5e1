# models.py
"""
Density models rho = phi^2 with phi = exp(-H).

A DensityModel exposes H, its gradient and the diagonal of its Hessian
(the Ito reduction of the Girsanov weight needs no mixed partials), plus the
optional constants (K1, K2, K3) with

    (i)   H(x) >= -K1                    for all x
    (ii)  d_i H(x) <= K2                 on every face {x_i = 0}
    (iii) d_i^2 H(x) <= K3               for all x

Presets: the Gaussian example, the flat model, a bounded-drift model with
compact support, a generic C^2 adapter and the wetting Hamiltonian built
from a symmetric convex pair potential V with pinned ends x_0 = x_{n+1} = 0.

All callables act on arrays whose last axis holds the n coordinates.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from errors import ModelError
from mathcore import smoothstep

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ModelBounds:
    """Constants K1 >= 0, K2, K3 of conditions (i)-(iii)."""

    K1: float
    K2: float
    K3: float


@dataclass(frozen=True)
class DensityModel:
    """Strictly positive phi = exp(-H) on [0, inf)^n with derivative data."""

    name: str
    n: int
    H: ArrayFn
    gradH: ArrayFn
    laplacianDiagH: ArrayFn
    bounds: ModelBounds | None = None

    def phi(self, x) -> np.ndarray:
        return np.exp(-self.H(np.asarray(x, dtype=float)))

    def rho(self, x) -> np.ndarray:
        return np.exp(-2.0 * self.H(np.asarray(x, dtype=float)))

    def drift(self, x) -> np.ndarray:
        """d_i ln rho = -2 d_i H, masked to 0 on the faces {x_i = 0}."""
        x = np.asarray(x, dtype=float)
        return np.where(x > 0.0, -2.0 * self.gradH(x), 0.0)

    def checked(self, fn: ArrayFn, x: np.ndarray, what: str) -> np.ndarray:
        """Evaluate fn and raise ModelError naming the first non-finite state."""
        values = np.asarray(fn(x), dtype=float)
        bad = ~np.isfinite(values)
        if np.any(bad):
            if values.ndim == x.ndim:
                bad = np.any(bad, axis=-1)
            index = np.unravel_index(np.argmax(bad), bad.shape)
            raise ModelError(f"{self.name}: non-finite {what}", state=x[index])
        return values


@dataclass(frozen=True)
class PairPotential:
    """Symmetric convex pair interaction V with c_minus <= V'' <= c_plus and V >= -b."""

    name: str
    V: Callable[[np.ndarray], np.ndarray]
    dV: Callable[[np.ndarray], np.ndarray]
    ddV: Callable[[np.ndarray], np.ndarray]
    c_minus: float
    c_plus: float
    b: float

    def validate(self, radius: float = 20.0, points: int = 2001, atol: float = 1e-12) -> None:
        """
        Check the invariants on a symmetric grid of [-radius, radius].

        Raises:
            ModelError: naming the violated invariant and a witness point
        """
        r = np.linspace(-radius, radius, points)
        v, vr = self.V(r), self.V(-r)
        if not np.allclose(v, vr, rtol=0.0, atol=atol * (1.0 + np.abs(v)).max()):
            witness = r[np.argmax(np.abs(v - vr))]
            raise ModelError(f"potential {self.name} is not symmetric", state=[witness])
        curvature = self.ddV(r)
        if np.any(curvature < self.c_minus - atol) or np.any(curvature > self.c_plus + atol):
            witness = r[np.argmax(np.maximum(self.c_minus - curvature, curvature - self.c_plus))]
            raise ModelError(f"potential {self.name} leaves [c_minus, c_plus]", state=[witness])
        if np.any(v < -self.b - atol):
            raise ModelError(f"potential {self.name} is below -b", state=[r[np.argmin(v)]])
        if abs(float(self.dV(np.zeros(1))[0])) > atol:
            raise ModelError(f"potential {self.name} has V'(0) != 0", state=[0.0])


# =========================================================================
# Pair potential presets
# =========================================================================
def quadratic_potential() -> PairPotential:
    """V(r) = r^2 / 2 (c_minus = c_plus = 1, b = 0)."""
    return PairPotential(
        name="quadratic",
        V=lambda r: 0.5 * np.square(r),
        dV=lambda r: np.asarray(r, dtype=float),
        ddV=lambda r: np.ones_like(np.asarray(r, dtype=float)),
        c_minus=1.0,
        c_plus=1.0,
        b=0.0,
    )


def soft_convex_potential(eps: float = 0.5) -> PairPotential:
    """V(r) = r^2/2 + eps cos r with 0 <= eps < 1 (c_-= 1-eps, c_+ = 1+eps, b = eps)."""
    if not 0.0 <= eps < 1.0:
        raise ModelError(f"soft-convex potential needs 0 <= eps < 1, got {eps}")
    return PairPotential(
        name=f"soft-convex(eps={eps:g})",
        V=lambda r: 0.5 * np.square(r) + eps * np.cos(r),
        dV=lambda r: np.asarray(r, dtype=float) - eps * np.sin(r),
        ddV=lambda r: 1.0 - eps * np.cos(r),
        c_minus=1.0 - eps,
        c_plus=1.0 + eps,
        b=eps,
    )


# =========================================================================
# Density models
# =========================================================================
def flat_model(n: int) -> DensityModel:
    """rho == 1: the undistorted product of sticky Brownian motions."""
    zeros = lambda x: np.zeros(np.shape(x)[:-1])  # noqa: E731
    return DensityModel(
        name="flat",
        n=n,
        H=zeros,
        gradH=lambda x: np.zeros(np.shape(x)),
        laplacianDiagH=lambda x: np.zeros(np.shape(x)),
        bounds=ModelBounds(K1=0.0, K2=0.0, K3=0.0),
    )


def gaussian_model(n: int) -> DensityModel:
    """
    phi(x) = exp(-|x|^2 / 2): H = |x|^2/2, d_i H = x_i, d_i^2 H = 1.

    The drift -2 x_i attracts every coordinate to the wall.
    """
    if n < 1:
        raise ModelError(f"dimension must be >= 1, got {n}")
    return DensityModel(
        name="gaussian",
        n=n,
        H=lambda x: 0.5 * np.sum(np.square(x), axis=-1),
        gradH=lambda x: np.array(x, dtype=float),
        laplacianDiagH=lambda x: np.ones(np.shape(x)),
        bounds=ModelBounds(K1=0.0, K2=0.0, K3=1.0),
    )


def _pad(x: np.ndarray) -> np.ndarray:
    # x_0 = x_{n+1} = 0
    pad = [(0, 0)] * (x.ndim - 1) + [(1, 1)]
    return np.pad(x, pad)


def wetting_model(n: int, V: PairPotential) -> DensityModel:
    """
    Nearest-neighbour wetting Hamiltonian

        H(x) = 1/4 * sum_{|i-j|=1, i,j in 0..n+1} V(x_i - x_j),   x_0 = x_{n+1} = 0,

    with d_i H = (V'(x_i - x_{i-1}) + V'(x_i - x_{i+1})) / 2 and the same
    form for d_i^2 H with V''. Declared bounds: K1 = n b / 2, K2 = 0, K3 = c_plus.

    Raises:
        ModelError: V violates symmetry or its curvature bounds
    """
    if n < 1:
        raise ModelError(f"dimension must be >= 1, got {n}")
    V.validate()

    def H(x):
        d = np.diff(_pad(np.asarray(x, dtype=float)), axis=-1)
        # every nearest-neighbour pair appears in both orders
        return 0.25 * np.sum(V.V(d) + V.V(-d), axis=-1)

    def neighbours(x):
        full = _pad(np.asarray(x, dtype=float))
        return full[..., 1:-1] - full[..., :-2], full[..., 1:-1] - full[..., 2:]

    def gradH(x):
        left, right = neighbours(x)
        return 0.5 * (V.dV(left) + V.dV(right))

    def laplacianDiagH(x):
        left, right = neighbours(x)
        return 0.5 * (V.ddV(left) + V.ddV(right))

    return DensityModel(
        name=f"wetting-{V.name}",
        n=n,
        H=H,
        gradH=gradH,
        laplacianDiagH=laplacianDiagH,
        bounds=ModelBounds(K1=n * V.b / 2.0, K2=0.0, K3=V.c_plus),
    )


def bounded_drift_model(n: int, c: float = 1.0, support: float = 1.0, width: float = 1.0) -> DensityModel:
    """
    d_i ln phi = c * chi(x_i) with chi = 1 on [0, support] and a C^2 cutoff to 0
    at support + width, so grad ln phi is bounded and compactly supported.
    """
    if n < 1:
        raise ModelError(f"dimension must be >= 1, got {n}")
    if support <= 0.0 or width <= 0.0:
        raise ModelError(f"support and width must be positive, got ({support}, {width})")

    def psi(y):
        # antiderivative of chi with psi(0) = 0
        s = np.clip((y - support) / width, 0.0, 1.0)
        ramp = s - (s**6 - 3.0 * s**5 + 2.5 * s**4)
        return np.where(y <= support, y, support + width * ramp)

    def chi(y):
        return 1.0 - smoothstep((y - support) / width)

    def dchi(y):
        s = np.clip((y - support) / width, 0.0, 1.0)
        return -30.0 * s * s * (1.0 - s) ** 2 / width

    cp = max(c, 0.0)
    return DensityModel(
        name="bounded-drift",
        n=n,
        H=lambda x: -c * np.sum(psi(np.asarray(x, dtype=float)), axis=-1),
        gradH=lambda x: -c * chi(np.asarray(x, dtype=float)),
        laplacianDiagH=lambda x: -c * dchi(np.asarray(x, dtype=float)),
        bounds=ModelBounds(K1=cp * n * (support + width / 2.0), K2=-c, K3=cp * 1.875 / width),
    )


def custom_model(
    n: int,
    H: ArrayFn,
    gradH: ArrayFn,
    laplacianDiagH: ArrayFn,
    bounds: ModelBounds | None = None,
    name: str = "custom",
) -> DensityModel:
    """Generic C^2 adapter: wrap user callables (vectorised over leading axes)."""
    return DensityModel(name=name, n=n, H=H, gradH=gradH, laplacianDiagH=laplacianDiagH, bounds=bounds)


# =========================================================================
# Model selection by name (CLI / API)
# =========================================================================
class ModelSpec(BaseModel):
    """Name + parameter record selecting a density model."""

    model_config = ConfigDict(extra="forbid")

    name: Literal["flat", "gaussian", "wetting", "bounded-drift"] = "flat"
    potential: Literal["quadratic", "soft-convex"] = "quadratic"
    epsilon: float = Field(default=0.5, ge=0.0, lt=1.0)
    c: float = 1.0
    support: float = Field(default=1.0, gt=0.0)
    width: float = Field(default=1.0, gt=0.0)


def build_potential(spec: ModelSpec) -> PairPotential:
    if spec.potential == "soft-convex":
        return soft_convex_potential(spec.epsilon)
    return quadratic_potential()


def build_model(spec: ModelSpec, n: int) -> DensityModel:
    """Resolve a ModelSpec to a DensityModel of dimension n."""
    if spec.name == "gaussian":
        return gaussian_model(n)
    if spec.name == "wetting":
        return wetting_model(n, build_potential(spec))
    if spec.name == "bounded-drift":
        return bounded_drift_model(n, c=spec.c, support=spec.support, width=spec.width)
    return flat_model(n)


# =========================================================================
# Verification of conditions (i)-(iii)
# =========================================================================
@dataclass
class ConditionCheck:
    name: str
    passed: bool
    worst_margin: float
    witness: list[float]


@dataclass
class ConditionReport:
    model: str
    checks: list[ConditionCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _box_grid(n: int, box: float | Sequence[float], resolution: int) -> np.ndarray:
    upper = np.broadcast_to(np.asarray(box, dtype=float), (n,))
    axes = [np.linspace(0.0, u, resolution) for u in upper]
    return np.array(list(itertools.product(*axes)))


def verify_conditions(
    model: DensityModel,
    box: float | Sequence[float],
    grid_resolution: int = 21,
    atol: float = 1e-10,
) -> ConditionReport:
    """
    Grid scan of conditions (i)-(iii) against the declared bounds.

    Args:
        model: model with declared bounds
        box: upper corner of the box [0, box]^n (scalar or per coordinate)
        grid_resolution: grid points per axis (each axis includes 0)

    Returns:
        ConditionReport listing the worst margin (bound minus observed) and
        its witness point for each condition; a negative margin fails.
    """
    if model.bounds is None:
        raise ModelError(f"model {model.name} declares no bounds")
    K = model.bounds
    points = _box_grid(model.n, box, grid_resolution)
    H = model.checked(model.H, points, "H")
    grad = model.checked(model.gradH, points, "gradient")
    lap = model.checked(model.laplacianDiagH, points, "Hessian diagonal")

    checks = []
    margins = H + K.K1
    j = int(np.argmin(margins))
    checks.append(ConditionCheck("(i) H >= -K1", bool(margins[j] >= -atol), float(margins[j]), points[j].tolist()))

    worst, witness = math.inf, []
    for i in range(model.n):
        face = points[:, i] == 0.0
        face_margin = K.K2 - grad[face, i]
        k = int(np.argmin(face_margin))
        if face_margin[k] < worst:
            worst, witness = float(face_margin[k]), points[face][k].tolist()
    checks.append(ConditionCheck("(ii) d_i H <= K2 on {x_i = 0}", worst >= -atol, worst, witness))

    lap_margin = K.K3 - lap.max(axis=-1)
    j = int(np.argmin(lap_margin))
    checks.append(
        ConditionCheck("(iii) d_i^2 H <= K3", bool(lap_margin[j] >= -atol), float(lap_margin[j]), points[j].tolist())
    )
    return ConditionReport(model=model.name, checks=checks)
