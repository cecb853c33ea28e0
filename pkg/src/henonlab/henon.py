"""Henon-like maps of multiplicity m with perturbation hooks.

The map is (x, y) |-> (x^2 + a - b^m y + zeta(x, b^m y), x + xi(x, b^m y)).
Perturbation fields carry analytic value/partial evaluators; there is no
automatic differentiation anywhere in the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ContractionError, ConvergenceError
from .maps1d import LyapValue
from .rootfind import newton2, newton_safeguarded

__all__ = [
    "Field2",
    "ZERO_FIELD",
    "HenonMap",
    "EvalResult",
    "Cycle",
    "AttractorReport",
    "evaluate",
    "apply_map",
    "jacobian",
    "rho_offset",
    "normalize_xi",
    "orbit_escape",
    "lyapunov",
    "find_attractors",
    "build_map",
    "MAP_REGISTRY",
    "sine_perturbed_fields",
]


def _zero(x: float, v: float) -> float:
    return 0.0


@dataclass(frozen=True)
class Field2:
    """Scalar field of two arguments with analytic partial evaluators."""

    value: Callable[[float, float], float] = _zero
    dx: Callable[[float, float], float] = _zero
    dv: Callable[[float, float], float] = _zero
    dxx: Callable[[float, float], float] = _zero
    dxv: Callable[[float, float], float] = _zero
    dvv: Callable[[float, float], float] = _zero


ZERO_FIELD = Field2()


@dataclass(frozen=True)
class HenonMap:
    """Henon-like map with parameters (a, b), multiplicity m and hooks."""

    a: float
    b: float
    m: int = 1
    zeta: Field2 = ZERO_FIELD
    xi: Field2 = ZERO_FIELD

    @property
    def bm(self) -> float:
        return self.b ** self.m

    @property
    def normalized(self) -> bool:
        """True when xi is identically zero."""
        return self.xi is ZERO_FIELD


@dataclass(frozen=True)
class EvalResult:
    image: tuple[float, float]
    jacobian: tuple[tuple[float, float], tuple[float, float]]
    det: float


def apply_map(f: HenonMap, z: Sequence[float]) -> tuple[float, float]:
    x, y = z
    v = f.bm * y
    return (x * x + f.a - v + f.zeta.value(x, v), x + f.xi.value(x, v))


def jacobian(f: HenonMap, z: Sequence[float]) -> tuple[tuple[float, float], tuple[float, float]]:
    x, y = z
    bm = f.bm
    v = bm * y
    return (
        (2.0 * x + f.zeta.dx(x, v), bm * (f.zeta.dv(x, v) - 1.0)),
        (1.0 + f.xi.dx(x, v), bm * f.xi.dv(x, v)),
    )


def evaluate(f: HenonMap, z: Sequence[float]) -> EvalResult:
    J = jacobian(f, z)
    det = J[0][0] * J[1][1] - J[0][1] * J[1][0]
    return EvalResult(apply_map(f, z), J, det)


# ---------------------------------------------------------------------------
# xi-normalization
# ---------------------------------------------------------------------------

def rho_offset(f: HenonMap, x: float, v: float) -> float:
    """Solve xi(x - t, v) = t; the horizontal shift of the conjugacy chart."""
    xi = f.xi

    def g(t: float) -> float:
        return xi.value(x - t, v) - t

    def dg(t: float) -> float:
        return -xi.dx(x - t, v) - 1.0

    return newton_safeguarded(g, xi.value(x, v), df=dg)


def normalize_xi(f: HenonMap, grid: int = 20, extent: float = 3.0) -> HenonMap:
    """Conjugate the map so that the second coordinate becomes exactly x.

    The chart is (x, y) |-> (x + xi(x, b^m y), y); its inverse uses the
    pointwise solved offset rho. The returned map re-expresses the first
    coordinate through a derived zeta field whose partials are central
    finite differences of the pointwise evaluator.
    """
    if f.normalized:
        return f
    bm = f.bm
    for i in range(grid):
        for j in range(grid):
            x = -extent + 2.0 * extent * i / (grid - 1)
            y = -extent + 2.0 * extent * j / (grid - 1)
            if abs(f.xi.dx(x, bm * y)) >= 0.5:
                raise ContractionError(
                    f"|dxi/dx| >= 1/2 at ({x!r}, {y!r}); xi-normalization unavailable"
                )

    a = f.a

    def forward(x: float, y: float) -> tuple[float, float]:
        return (x + f.xi.value(x, bm * y), y)

    def inverse(X: float, y: float) -> tuple[float, float]:
        return (X - rho_offset(f, X, bm * y), y)

    def zeta_value(X: float, V: float) -> float:
        y = V / bm if bm != 0.0 else 0.0
        x, _ = inverse(X, y)
        w = apply_map(f, (x, y))
        return forward(w[0], w[1])[0] - (X * X + a - V)

    h = 1e-6

    def zeta_dx(X: float, V: float) -> float:
        return (zeta_value(X + h, V) - zeta_value(X - h, V)) / (2.0 * h)

    def zeta_dv(X: float, V: float) -> float:
        return (zeta_value(X, V + h) - zeta_value(X, V - h)) / (2.0 * h)

    def zeta_dxx(X: float, V: float) -> float:
        return (zeta_value(X + h, V) - 2.0 * zeta_value(X, V) + zeta_value(X - h, V)) / (h * h)

    def zeta_dxv(X: float, V: float) -> float:
        return (zeta_dx(X, V + h) - zeta_dx(X, V - h)) / (2.0 * h)

    def zeta_dvv(X: float, V: float) -> float:
        return (zeta_value(X, V + h) - 2.0 * zeta_value(X, V) + zeta_value(X, V - h)) / (h * h)

    zeta = Field2(zeta_value, zeta_dx, zeta_dv, zeta_dxx, zeta_dxv, zeta_dvv)
    return HenonMap(f.a, f.b, f.m, zeta, ZERO_FIELD)


# ---------------------------------------------------------------------------
# orbits, Lyapunov, attractors
# ---------------------------------------------------------------------------

def orbit_escape(
    f: HenonMap,
    z0: Sequence[float],
    n_max: int,
    r_esc: float = 10.0,
) -> tuple[list[tuple[float, float]], bool, int]:
    """Iterate until the sup-norm exceeds r_esc or n_max steps are done."""
    z = (float(z0[0]), float(z0[1]))
    traj = [z]
    for step in range(1, n_max + 1):
        z = apply_map(f, z)
        traj.append(z)
        if max(abs(z[0]), abs(z[1])) > r_esc:
            return traj, True, step
    return traj, False, n_max


def lyapunov(
    f: HenonMap,
    z0: Sequence[float],
    v0: Sequence[float],
    n: int,
    r_esc: float = 10.0,
) -> LyapValue:
    """Tangent-growth exponent along the orbit of z0, per step.

    The tangent vector is renormalized each step, making the result exactly
    invariant under scaling of v0.
    """
    z = (float(z0[0]), float(z0[1]))
    norm = math.hypot(v0[0], v0[1])
    if norm == 0.0:
        raise ValueError("v0 must be nonzero")
    vx, vy = v0[0] / norm, v0[1] / norm
    total = 0.0
    for _ in range(n):
        J = jacobian(f, z)
        wx = J[0][0] * vx + J[0][1] * vy
        wy = J[1][0] * vx + J[1][1] * vy
        growth = math.hypot(wx, wy)
        if growth == 0.0:
            return LyapValue("zero-derivative", None)
        total += math.log(growth)
        vx, vy = wx / growth, wy / growth
        z = apply_map(f, z)
        if max(abs(z[0]), abs(z[1])) > r_esc:
            return LyapValue("escape", None)
    return LyapValue("value", total / n)


@dataclass(frozen=True)
class Cycle:
    points: tuple[tuple[float, float], ...]
    period: int
    multipliers: tuple[complex, complex]

    @property
    def spectral_radius(self) -> float:
        return max(abs(self.multipliers[0]), abs(self.multipliers[1]))


@dataclass(frozen=True)
class AttractorReport:
    cycles: tuple[Cycle, ...]
    skipped: tuple[tuple[float, float], ...]


def _mat_mul(A, B):
    return (
        (A[0][0] * B[0][0] + A[0][1] * B[1][0], A[0][0] * B[0][1] + A[0][1] * B[1][1]),
        (A[1][0] * B[0][0] + A[1][1] * B[1][0], A[1][0] * B[0][1] + A[1][1] * B[1][1]),
    )


def _cycle_jacobian(f: HenonMap, z: Sequence[float], period: int):
    J = ((1.0, 0.0), (0.0, 1.0))
    w = (z[0], z[1])
    for _ in range(period):
        J = _mat_mul(jacobian(f, w), J)
        w = apply_map(f, w)
    return J, w


def _same_cycle(points_a, points_b, tol: float) -> bool:
    if len(points_a) != len(points_b):
        return False
    n = len(points_a)
    for shift in range(n):
        if all(
            max(abs(points_a[(i + shift) % n][0] - points_b[i][0]),
                abs(points_a[(i + shift) % n][1] - points_b[i][1])) <= tol
            for i in range(n)
        ):
            return True
    return False


def find_attractors(
    f: HenonMap,
    seeds: Sequence[Sequence[float]],
    max_period: int = 64,
    n_transient: int = 5000,
    tol: float = 1e-9,
    r_esc: float = 10.0,
    dedup_tol: float = 1e-6,
) -> AttractorReport:
    """Detect attracting cycles by recurrence, then refine by Newton.

    Non-escaping seeds run a transient, then the minimal period <= max_period
    with recurrence within tol is located, the cycle is refined on
    f^period - id, and Floquet multipliers are computed from the Jacobian
    product. Cycles with spectral radius >= 1 are discarded; duplicates are
    identified up to cyclic shifts.
    """
    cycles: list[Cycle] = []
    skipped: list[tuple[float, float]] = []
    for seed in seeds:
        z = (float(seed[0]), float(seed[1]))
        escaped = False
        for _ in range(n_transient):
            z = apply_map(f, z)
            if max(abs(z[0]), abs(z[1])) > r_esc:
                escaped = True
                break
        if escaped:
            continue

        period = None
        w = z
        for p in range(1, max_period + 1):
            w = apply_map(f, w)
            if max(abs(w[0] - z[0]), abs(w[1] - z[1])) < tol:
                period = p
                break
        if period is None:
            skipped.append((seed[0], seed[1]))
            continue

        def G(v, p=period):
            _, w2 = _cycle_jacobian(f, v, p)
            return (w2[0] - v[0], w2[1] - v[1])

        def JG(v, p=period):
            J, _ = _cycle_jacobian(f, v, p)
            return ((J[0][0] - 1.0, J[0][1]), (J[1][0], J[1][1] - 1.0))

        try:
            zr = newton2(G, z, jac=JG, rtol=1e-13)
        except ConvergenceError:
            skipped.append((seed[0], seed[1]))
            continue

        J, _ = _cycle_jacobian(f, zr, period)
        eigs = np.linalg.eigvals(np.array(J, dtype=float))
        mults = (complex(eigs[0]), complex(eigs[1]))
        if max(abs(mults[0]), abs(mults[1])) >= 1.0:
            continue

        points = []
        w = zr
        for _ in range(period):
            points.append(w)
            w = apply_map(f, w)
        # keep the minimal period: reject if a proper divisor already closes
        minimal = True
        for q in range(1, period):
            if period % q == 0:
                if max(abs(points[q][0] - points[0][0]), abs(points[q][1] - points[0][1])) < dedup_tol:
                    minimal = False
                    break
        if not minimal:
            continue

        cycle = Cycle(tuple(points), period, mults)
        if not any(_same_cycle(cycle.points, c.points, dedup_tol) for c in cycles):
            cycles.append(cycle)
    return AttractorReport(tuple(cycles), tuple(skipped))


# ---------------------------------------------------------------------------
# builtin map registry
# ---------------------------------------------------------------------------

def sine_perturbed_fields(delta: float) -> tuple[Field2, Field2]:
    """zeta = delta*sin(x+v), xi = delta*sin(x); C1 norm is delta."""
    zeta = Field2(
        value=lambda x, v: delta * math.sin(x + v),
        dx=lambda x, v: delta * math.cos(x + v),
        dv=lambda x, v: delta * math.cos(x + v),
        dxx=lambda x, v: -delta * math.sin(x + v),
        dxv=lambda x, v: -delta * math.sin(x + v),
        dvv=lambda x, v: -delta * math.sin(x + v),
    )
    xi = Field2(
        value=lambda x, v: delta * math.sin(x),
        dx=lambda x, v: delta * math.cos(x),
        dxx=lambda x, v: -delta * math.sin(x),
    )
    return zeta, xi


def _build_standard(a: float, b: float, m: int = 1, **_) -> HenonMap:
    return HenonMap(a, b, m)


def _build_zero(a: float, b: float, m: int = 1, **_) -> HenonMap:
    return HenonMap(a, 0.0, m)


def _build_sine(a: float, b: float, m: int = 1, delta: float = 0.01, **_) -> HenonMap:
    zeta, xi = sine_perturbed_fields(delta)
    return HenonMap(a, b, m, zeta, xi)


MAP_REGISTRY: dict[str, Callable[..., HenonMap]] = {
    "standard": _build_standard,
    "zero": _build_zero,
    "sine-perturbed": _build_sine,
}


def build_map(name: str, a: float, b: float, m: int = 1, **kwargs) -> HenonMap:
    try:
        builder = MAP_REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown map {name!r}; known: {sorted(MAP_REGISTRY)}") from None
    return builder(a, b, m, **kwargs)
