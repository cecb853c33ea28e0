"""Safeguarded scalar and small-system root finding.

All solvers in the package funnel through these routines so that tolerances
and iteration caps are uniform: relative tolerance 1e-12, at most 200
iterations, bisection fallback whenever a bracket is available.
"""

from __future__ import annotations

from typing import Callable, Sequence

from .errors import BracketError, ConvergenceError

__all__ = [
    "DEFAULT_RTOL",
    "DEFAULT_MAX_ITER",
    "bisect",
    "newton_safeguarded",
    "newton2",
    "central_diff",
    "second_diff",
]

DEFAULT_RTOL = 1e-12
DEFAULT_MAX_ITER = 200


def _converged(step: float, x: float, rtol: float) -> bool:
    return abs(step) <= rtol * max(1.0, abs(x))


def bisect(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    rtol: float = DEFAULT_RTOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> float:
    """Bisection on [lo, hi]; requires a sign change at the endpoints."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0.0) == (fhi > 0.0):
        raise BracketError(f"no sign change on [{lo!r}, {hi!r}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0 or _converged(hi - lo, mid, rtol):
            return mid
        if (fmid > 0.0) == (flo > 0.0):
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
    return 0.5 * (lo + hi)


def newton_safeguarded(
    f: Callable[[float], float],
    x0: float,
    bracket: tuple[float, float] | None = None,
    df: Callable[[float], float] | None = None,
    rtol: float = DEFAULT_RTOL,
    max_iter: int = DEFAULT_MAX_ITER,
    ftol: float = 0.0,
) -> float:
    """Newton iteration falling back to bisection inside an optional bracket.

    Without ``df`` a secant update is used. When a bracket is supplied the
    iterate is confined to it (bisection step whenever Newton exits or the
    derivative degenerates) and the bracket shrinks around the sign change.
    ``ftol`` accepts a stalled iterate whose residual is already below that
    level; use it for targets whose evaluation carries a noise floor.
    """
    lo = hi = flo = fhi = None
    if bracket is not None:
        lo, hi = float(min(bracket)), float(max(bracket))
        flo, fhi = f(lo), f(hi)
        if flo == 0.0:
            return lo
        if fhi == 0.0:
            return hi
        if (flo > 0.0) == (fhi > 0.0):
            raise BracketError(f"no sign change on [{lo!r}, {hi!r}]")

    x = float(x0)
    fx = f(x)
    if fx == 0.0:
        return x
    x_prev, f_prev = x + max(1e-8, 1e-8 * abs(x)), None

    for _ in range(max_iter):
        if df is not None:
            slope = df(x)
        else:
            if f_prev is None:
                f_prev = f(x_prev)
            slope = (fx - f_prev) / (x - x_prev) if x != x_prev else 0.0

        use_bisection = slope == 0.0 or not _finite(slope)
        if not use_bisection:
            step = fx / slope
            x_new = x - step
            if lo is not None and not (lo <= x_new <= hi):
                use_bisection = True
        if use_bisection:
            if lo is None:
                if abs(fx) <= ftol:
                    return x
                raise ConvergenceError(
                    f"newton stalled at x={x!r} with no bracket to fall back on"
                )
            x_new = 0.5 * (lo + hi)

        f_new = f(x_new)
        if lo is not None:
            if (f_new > 0.0) == (flo > 0.0):
                lo, flo = x_new, f_new
            else:
                hi, fhi = x_new, f_new
        x_prev, f_prev = x, fx
        x, fx = x_new, f_new
        if fx == 0.0 or _converged(x - x_prev, x, rtol):
            return x
    raise ConvergenceError(f"newton did not converge after {max_iter} iterations")


def newton2(
    F: Callable[[Sequence[float]], tuple[float, float]],
    x0: Sequence[float],
    jac: Callable[[Sequence[float]], tuple[tuple[float, float], tuple[float, float]]] | None = None,
    rtol: float = DEFAULT_RTOL,
    max_iter: int = 100,
    fd_step: float = 1e-7,
) -> tuple[float, float]:
    """Damped 2x2 Newton with an optional analytic Jacobian.

    The finite-difference Jacobian uses central differences with a step
    scaled by the iterate. Damping halves the step (up to 8 times) while the
    residual norm fails to decrease.
    """
    x = [float(x0[0]), float(x0[1])]
    fx = F(x)
    rnorm = max(abs(fx[0]), abs(fx[1]))
    for _ in range(max_iter):
        if jac is not None:
            J = jac(x)
        else:
            J = _fd_jacobian(F, x, fd_step)
        det = J[0][0] * J[1][1] - J[0][1] * J[1][0]
        if det == 0.0 or not _finite(det):
            raise ConvergenceError(f"singular jacobian at {tuple(x)!r}")
        dx0 = (fx[0] * J[1][1] - fx[1] * J[0][1]) / det
        dx1 = (fx[1] * J[0][0] - fx[0] * J[1][0]) / det

        scale = 1.0
        for _ in range(8):
            cand = [x[0] - scale * dx0, x[1] - scale * dx1]
            f_cand = F(cand)
            if max(abs(f_cand[0]), abs(f_cand[1])) < rnorm or scale <= 1.0 / 256:
                break
            scale *= 0.5
        x_prev = list(x)
        x, fx = cand, f_cand
        rnorm = max(abs(fx[0]), abs(fx[1]))
        step = max(abs(x[0] - x_prev[0]), abs(x[1] - x_prev[1]))
        if _converged(step, max(abs(x[0]), abs(x[1])), rtol) or rnorm == 0.0:
            return (x[0], x[1])
    raise ConvergenceError(f"newton2 did not converge after {max_iter} iterations")


def _fd_jacobian(F, x, h):
    rows = [[0.0, 0.0], [0.0, 0.0]]
    for j in range(2):
        hj = h * max(1.0, abs(x[j]))
        xp = list(x)
        xm = list(x)
        xp[j] += hj
        xm[j] -= hj
        fp, fm = F(xp), F(xm)
        rows[0][j] = (fp[0] - fm[0]) / (2.0 * hj)
        rows[1][j] = (fp[1] - fm[1]) / (2.0 * hj)
    return ((rows[0][0], rows[0][1]), (rows[1][0], rows[1][1]))


def central_diff(f: Callable[[float], float], x: float, h: float) -> float:
    """First derivative by central difference."""
    return (f(x + h) - f(x - h)) / (2.0 * h)


def second_diff(f: Callable[[float], float], x: float, h: float) -> float:
    """Second derivative by central difference."""
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)


def _finite(v: float) -> bool:
    return v == v and abs(v) != float("inf")
