"""Cross-map chains: factorized backward solves along admissible words.

A chain of order-1 factors inverts the first coordinate of a xi-normalized
map along a prescribed branch itinerary. The joint solve exchanges boundary
data: it maps (x on the image side, y on the domain side) to (x on the
domain side, y on the image side). Both coordinates of the answer come with
analytic derivatives assembled from per-factor partials, plus an independent
forward-shooting oracle for cross-validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import BracketError, BranchError, ConvergenceError, NonMonotoneError
from .henon import HenonMap, apply_map, evaluate
from .maps1d import Piece1D, piece_1d
from .rootfind import bisect, newton_safeguarded

__all__ = [
    "ConeSpec",
    "CrossMapChain",
    "CrossEval",
    "CrossDerivs",
    "ShootResult",
    "HyperbolicityReport",
    "DistortionReport",
    "factorize_chain",
    "eval_cross",
    "eval_cross_derivatives",
    "slice_image",
    "shoot_oracle",
    "reverse_eval",
    "det_identity",
    "hyperbolicity_check",
    "distortion_report",
]

_SWEEP_TOL = 1e-12
_MAX_SWEEPS = 200


@dataclass(frozen=True)
class ConeSpec:
    """Cone-field parameters; unset slopes derive from the core width eta."""

    eta: float
    c_h: float = None  # type: ignore[assignment]
    c_v: float = None  # type: ignore[assignment]
    c: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.c_h is None:
            object.__setattr__(self, "c_h", 1.0 / self.eta)
        if self.c_v is None:
            object.__setattr__(self, "c_v", self.eta / 2.0)
        if self.c is None:
            object.__setattr__(self, "c", 1.0 / math.sqrt(2.0))


@dataclass(frozen=True)
class CrossMapChain:
    """A xi-normalized map together with the branch data of a 1-D piece."""

    henon: HenonMap
    piece: Piece1D

    @property
    def signs(self) -> tuple[int, ...]:
        return self.piece.branch_signs

    @property
    def order(self) -> int:
        return self.piece.order


def factorize_chain(f: HenonMap, word: str | Piece1D) -> CrossMapChain:
    if not f.normalized:
        raise ValueError("cross-map factorization requires a xi-normalized map")
    piece = piece_1d(word, f.a) if isinstance(word, str) else word
    if piece.order < 1:
        raise ValueError(f"word {piece.word!r} has no quadratic factors")
    return CrossMapChain(f, piece)


def _solve_factor(f: HenonMap, sign: int, x_next: float, y_here: float) -> float:
    """Solve x from x_next = x^2 + a - b^m y + zeta(x, b^m y) on one branch."""
    v = f.bm * y_here
    radicand = x_next - f.a + v
    if radicand < 0.0:
        raise BranchError(
            f"negative branch seed radicand {radicand!r} for target {x_next!r}"
        )
    seed = sign * math.sqrt(radicand)

    def g(x: float) -> float:
        return x * x + f.a - v + f.zeta.value(x, v) - x_next

    def dg(x: float) -> float:
        return 2.0 * x + f.zeta.dx(x, v)

    return newton_safeguarded(g, seed, df=dg)


@dataclass(frozen=True)
class CrossEval:
    A: float
    B: float
    x_path: tuple[float, ...]  # x_0 .. x_N
    y_path: tuple[float, ...]  # y_0 .. y_N
    sweeps: int


def eval_cross(
    chain: CrossMapChain,
    x1: float,
    y0: float,
    tol: float = _SWEEP_TOL,
    max_sweeps: int = _MAX_SWEEPS,
) -> CrossEval:
    """Joint backward solve by Gauss-Seidel sweeps.

    x1 is the x-coordinate on the image side (target of the last factor);
    y0 is the y-coordinate on the domain side. Interior y-values start at y0
    and are refreshed from the solved x-values after each sweep; the coupling
    is O(b^m), so the iteration contracts fast and is exact at b = 0.
    """
    f = chain.henon
    n = chain.order
    signs = chain.signs
    xs = [0.0] * (n + 1)
    xs[n] = x1
    ys = [y0] * (n + 1)
    prev_residual = math.inf
    increases = 0
    for sweep in range(1, max_sweeps + 1):
        change = 0.0
        for i in range(n - 1, -1, -1):
            xi_new = _solve_factor(f, signs[i], xs[i + 1], ys[i])
            change = max(change, abs(xi_new - xs[i]))
            xs[i] = xi_new
        for i in range(1, n + 1):
            yi_new = xs[i - 1]
            change = max(change, abs(yi_new - ys[i]))
            ys[i] = yi_new
        if sweep > 1 and change <= tol:
            return CrossEval(xs[0], ys[n], tuple(xs), tuple(ys), sweep)
        if change >= prev_residual:
            increases += 1
            if increases >= 3:
                raise ConvergenceError(
                    f"cross-map sweep diverging (residual {change!r} after {sweep} sweeps)"
                )
        else:
            increases = 0
        prev_residual = change
    raise ConvergenceError(f"cross-map sweep did not converge in {max_sweeps} sweeps")


@dataclass(frozen=True)
class CrossDerivs:
    A: float
    B: float
    dA: tuple[float, float]  # (d/dx1, d/dy0)
    dB: tuple[float, float]
    factor_dx: tuple[float, ...]  # per-factor d x_i / d x_{i+1}
    factor_dy: tuple[float, ...]  # per-factor d x_i / d y_i
    x_path: tuple[float, ...]
    y_path: tuple[float, ...]


def eval_cross_derivatives(
    chain: CrossMapChain,
    x1: float,
    y0: float,
    tol: float = _SWEEP_TOL,
) -> CrossDerivs:
    """Solve the chain, then propagate gradients through the linear system.

    Each factor contributes dx_i = c_i dx_{i+1} + d_i dy_i with
    c_i = 1/(2 x_i + zeta_x) and d_i = b^m (1 - zeta_v)/(2 x_i + zeta_x),
    and dy_{i+1} = dx_i. The gradient system is solved by the same sweeping
    scheme as the values, with boundary data dx_N = (1, 0), dy_0 = (0, 1).
    Convergence is measured per component in relative terms: the y0-column
    scales like b^n and would otherwise freeze at an absolute-threshold
    stop long before it carries any correct digits.
    """
    base = eval_cross(chain, x1, y0, tol=tol)
    f = chain.henon
    n = chain.order
    xs, ys = base.x_path, base.y_path
    bm = f.bm
    cs = []
    ds = []
    for i in range(n):
        v = bm * ys[i]
        slope = 2.0 * xs[i] + f.zeta.dx(xs[i], v)
        cs.append(1.0 / slope)
        ds.append(bm * (1.0 - f.zeta.dv(xs[i], v)) / slope)

    dxs = [(0.0, 0.0)] * (n + 1)
    dxs[n] = (1.0, 0.0)
    dys = [(0.0, 0.0)] * (n + 1)
    dys[0] = (0.0, 1.0)
    def rel_gap(new: float, old: float) -> float:
        scale = max(abs(new), abs(old))
        return abs(new - old) / scale if scale else 0.0

    for _ in range(_MAX_SWEEPS):
        change = 0.0
        for i in range(n - 1, -1, -1):
            new = (
                cs[i] * dxs[i + 1][0] + ds[i] * dys[i][0],
                cs[i] * dxs[i + 1][1] + ds[i] * dys[i][1],
            )
            change = max(change, rel_gap(new[0], dxs[i][0]),
                         rel_gap(new[1], dxs[i][1]))
            dxs[i] = new
        for i in range(1, n + 1):
            change = max(change, rel_gap(dxs[i - 1][0], dys[i][0]),
                         rel_gap(dxs[i - 1][1], dys[i][1]))
            dys[i] = dxs[i - 1]
        if change <= tol:
            break
    else:
        raise ConvergenceError("cross-map gradient sweep did not converge")

    return CrossDerivs(
        base.A, base.B, dxs[0], dys[n], tuple(cs), tuple(ds), xs, ys
    )


# ---------------------------------------------------------------------------
# independent forward-shooting oracle and time reversal
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShootResult:
    A: float
    B: float


def _forward_exit(f: HenonMap, x0: float, y0: float, n: int) -> tuple[float, float]:
    """Final x and the preceding x (= final y) after n forward steps."""
    z = (x0, y0)
    for _ in range(n):
        z = apply_map(f, z)
    return z[0], z[1]


def slice_image(chain: CrossMapChain, y0: float) -> tuple[float, float]:
    """Attainable image-side x range when the domain-side x runs the segment.

    Computed by forward iteration of the segment endpoints; for b != 0 this
    differs from the 1-D image by an amount that grows with the word order.
    """
    f = chain.henon
    lo, hi = chain.piece.segment
    a = _forward_exit(f, lo, y0, chain.order)[0]
    b = _forward_exit(f, hi, y0, chain.order)[0]
    return (a, b) if a <= b else (b, a)


def shoot_oracle(
    chain: CrossMapChain,
    x1: float,
    y0: float,
    tol: float = 1e-12,
    samples: int = 9,
) -> ShootResult:
    """Cross-validate the chain solve by bisection on a forward residual.

    The domain-side x runs over the 1-D segment of the word; the residual is
    the final x of the explicit forward orbit minus the target x1. The slice
    must be strictly monotone over the bracket.
    """
    f = chain.henon
    n = chain.order
    lo, hi = chain.piece.segment

    def residual(x0: float) -> float:
        return _forward_exit(f, x0, y0, n)[0] - x1

    values = [residual(lo + (hi - lo) * k / (samples - 1)) for k in range(samples)]
    diffs = [values[k + 1] - values[k] for k in range(samples - 1)]
    if not (all(d > 0 for d in diffs) or all(d < 0 for d in diffs)):
        raise NonMonotoneError(
            f"forward slice is not monotone over [{lo!r}, {hi!r}]"
        )
    try:
        x0 = bisect(residual, lo, hi, rtol=tol)
    except BracketError as exc:
        raise NonMonotoneError(
            f"target {x1!r} not bracketed by the word segment: {exc}"
        ) from exc
    _, y_exit = _forward_exit(f, x0, y0, n)
    return ShootResult(x0, y_exit)


def reverse_eval(
    chain: CrossMapChain,
    x0: float,
    y_exit: float,
    seed: float = 0.0,
) -> tuple[float, float]:
    """Recover (x1, y0) from the opposite boundary pair (x0, y_exit).

    Scalar shooting on y0: the forward orbit from (x0, y0) must exit with
    final y equal to y_exit. Useful as a time-symmetry check; the constraint
    slope degenerates as b -> 0, so this is meant for |b| bounded away
    from zero.
    """
    f = chain.henon
    n = chain.order

    def g(y0: float) -> float:
        return _forward_exit(f, x0, y0, n)[1] - y_exit

    y0 = newton_safeguarded(g, seed)
    x1, _ = _forward_exit(f, x0, y0, n)
    return x1, y0


def det_identity(chain: CrossMapChain, x1: float, y0: float) -> tuple[float, float]:
    """Return (dB/dy0 / dA/dx1, product of pointwise Jacobian determinants).

    The two numbers agree for any chain; with zero fields and m = 1 both
    equal b^order.
    """
    d = eval_cross_derivatives(chain, x1, y0)
    ratio = d.dB[1] / d.dA[0]
    prod = 1.0
    for i in range(chain.order):
        prod *= evaluate(chain.henon, (d.x_path[i], d.y_path[i])).det
    return ratio, prod


# ---------------------------------------------------------------------------
# hyperbolicity margins
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HyperbolicityReport:
    ok: bool
    margin: float
    worst_point: tuple[float, float]
    worst_lhs: tuple[float, float]
    n_probes: int


def hyperbolicity_check(
    chain: CrossMapChain,
    cone: ConeSpec,
    x1_values: Sequence[float],
    y0_values: Sequence[float],
) -> HyperbolicityReport:
    """Verify the contraction inequalities of the cross map on a probe grid.

    At every probe both
        |dA/dx1|/c + |dA/dy0|/c_v <= 1   and
        |dB/dy0|/c + |dB/dx1|/c_h <= 1
    must hold; the margin is one minus the worst left-hand side.
    """
    worst = -math.inf
    worst_point = (math.nan, math.nan)
    worst_lhs = (math.nan, math.nan)
    count = 0
    for x1 in x1_values:
        for y0 in y0_values:
            d = eval_cross_derivatives(chain, x1, y0)
            lhs1 = abs(d.dA[0]) / cone.c + abs(d.dA[1]) / cone.c_v
            lhs2 = abs(d.dB[1]) / cone.c + abs(d.dB[0]) / cone.c_h
            count += 1
            if max(lhs1, lhs2) > worst:
                worst = max(lhs1, lhs2)
                worst_point = (x1, y0)
                worst_lhs = (lhs1, lhs2)
    return HyperbolicityReport(worst < 1.0, 1.0 - worst, worst_point, worst_lhs, count)


# ---------------------------------------------------------------------------
# distortion bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DistortionReport:
    B0: float
    B1: float
    Bm: float | None  # None when b = 0 makes the scaled quantity undefined
    sum_formula_gap: float
    n_probes: int


def distortion_report(
    build: Callable[[float, float], HenonMap],
    word: str,
    ab_values: Sequence[tuple[float, float]],
    x1_values: Sequence[float],
    y0_values: Sequence[float],
    fd_step: float = 1e-6,
) -> DistortionReport:
    """Uniform bounds over a parameter/probe grid.

    B0 bounds values and first partials of the cross map; B1 bounds the
    phase-space gradient of log|dA/dx1| and log|dB/dy0| (central finite
    differences); Bm bounds the parameter gradient of log|dB/dy0 / b^(m n)|
    and is reported as None when any grid point has b = 0. The sum-formula
    gap compares |dA/dx1| against the product of per-factor slopes along the
    solved path; it vanishes identically at b = 0.
    """
    h = fd_step
    B0 = 0.0
    B1 = 0.0
    Bm: float | None = 0.0
    gap = 0.0
    count = 0

    def chain_at(a: float, b: float) -> CrossMapChain:
        return factorize_chain(build(a, b), word)

    def log_abs_dA(ch: CrossMapChain, x1: float, y0: float) -> float:
        return math.log(abs(eval_cross_derivatives(ch, x1, y0).dA[0]))

    def log_abs_dB(ch: CrossMapChain, x1: float, y0: float) -> float:
        return math.log(abs(eval_cross_derivatives(ch, x1, y0).dB[1]))

    for a, b in ab_values:
        ch = chain_at(a, b)
        mn = ch.henon.m * ch.order
        for x1 in x1_values:
            for y0 in y0_values:
                d = eval_cross_derivatives(ch, x1, y0)
                count += 1
                B0 = max(
                    B0,
                    abs(d.A), abs(d.B),
                    abs(d.dA[0]), abs(d.dA[1]), abs(d.dB[0]), abs(d.dB[1]),
                )
                # dB/dy0 vanishes identically at b = 0; its log has no
                # gradient there and the chain is effectively 1-D
                fns = (log_abs_dA,) if b == 0.0 else (log_abs_dA, log_abs_dB)
                for fn in fns:
                    gx = (fn(ch, x1 + h, y0) - fn(ch, x1 - h, y0)) / (2 * h)
                    gy = (fn(ch, x1, y0 + h) - fn(ch, x1, y0 - h)) / (2 * h)
                    B1 = max(B1, abs(gx), abs(gy))
                prod = 1.0
                for c in d.factor_dx:
                    prod *= abs(c)
                gap = max(gap, abs(abs(d.dA[0]) - prod) / abs(d.dA[0]))
                if b == 0.0:
                    Bm = None
                elif Bm is not None:
                    def scaled(aa: float, bb: float) -> float:
                        chh = chain_at(aa, bb)
                        return log_abs_dB(chh, x1, y0) - mn * math.log(abs(bb))

                    ga = (scaled(a + h, b) - scaled(a - h, b)) / (2 * h)
                    gb = (scaled(a, b + h) - scaled(a, b - h)) / (2 * h)
                    Bm = max(Bm, abs(ga), abs(gb))
    return DistortionReport(B0, B1, Bm, gap, count)
