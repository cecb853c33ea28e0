"""Renormalization around quadratic tangencies of strip return maps.

A word's cross map, together with one explicit application of the map
through the fold, defines a return to an affine chart anchored at the
tangency. In that chart the return is a small perturbation of the quadratic
family; the chart data (anchor, slopes, defect, curvature) produce the
renormalized parameters. A two-word cycle version renormalizes to a pair of
quadratics and underlies twin-attractor hunting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .crossmap import (
    CrossMapChain,
    eval_cross,
    eval_cross_derivatives,
    factorize_chain,
)
from .errors import (
    ConvergenceError,
    DomainError,
    HenonLabError,
    NoCrossingError,
    TangencyError,
)
from .henon import (
    AttractorReport,
    Field2,
    HenonMap,
    ZERO_FIELD,
    apply_map,
    evaluate,
    find_attractors,
)
from .maps1d import ladder, piece_1d, special_parameters
from .rootfind import bisect, newton2, newton_safeguarded

__all__ = [
    "TangencyData",
    "RenormData",
    "RenormWindow",
    "MultiRenormData",
    "DoubleTangency",
    "TwinResult",
    "ConeCertificate",
    "find_tangency",
    "renormalize",
    "delta_star",
    "solve_mu_zero",
    "renorm_window",
    "conjugate_rescale",
    "multi_renormalize",
    "double_tangency",
    "twin_find",
    "certify_cone_expansion",
]

# First differences tolerate small steps; second differences amplify
# rounding by 1/h^2 and need a larger base step. Richardson extrapolation
# keeps the truncation of both at O(h^4).
_FD_GRAD_STEP = 1e-4
_FD_CURV_STEP = 4e-3
_MIN_CURVATURE = 1e-3


def _slope_extrapolated(f: Callable[[float], float], h: float) -> float:
    """Richardson-extrapolated central first difference at 0 (O(h^4))."""

    def central(step: float) -> float:
        return (f(step) - f(-step)) / (2.0 * step)

    return (4.0 * central(0.5 * h) - central(h)) / 3.0


def _curvature_extrapolated(f: Callable[[float], float], h: float) -> float:
    """Richardson-extrapolated central second difference at 0 (O(h^4))."""
    f0 = f(0.0)

    def second(step: float) -> float:
        return (f(step) - 2.0 * f0 + f(-step)) / (step * step)

    return (4.0 * second(0.5 * h) - second(h)) / 3.0


def _first_coord(f: HenonMap, x: float, y: float) -> float:
    v = f.bm * y
    return x * x + f.a - v + f.zeta.value(x, v)


@dataclass(frozen=True)
class TangencyData:
    """Chart data at the fold of a word's return.

    c anchors the tangency; sigma and lam are the cross-map slopes there;
    mu is the defect (signed distance of the fold image from the strip),
    q half the fold curvature, d the Jacobian determinant at the fold
    point. H and V trace the strip boundary graphs through the anchor.
    """

    chain: CrossMapChain
    c: float
    sigma: float
    lam: float
    mu: float
    q: float
    d: float

    def H(self, t: float) -> float:
        return eval_cross(self.chain, self.c + t, self.c).B

    def V(self, s: float) -> float:
        return eval_cross(self.chain, self.c, self.c + s).A

    def defect(self, t: float) -> float:
        """One fold step from the chart ray versus the next strip entry."""
        f = self.chain.henon
        b_val = eval_cross(self.chain, self.c + t, self.c).B
        return _first_coord(f, self.c + t, b_val) - eval_cross(
            self.chain, self.c, self.c + t
        ).A


def _defect_at(chain: CrossMapChain, c: float, t: float) -> float:
    f = chain.henon
    b_val = eval_cross(chain, c + t, c).B
    return _first_coord(f, c + t, b_val) - eval_cross(chain, c, c + t).A


def find_tangency(chain: CrossMapChain, seed: float = 0.0) -> TangencyData:
    """Locate the anchor where the fold is tangent to the strip direction.

    The anchor solves d(defect)/dt = 0 at t = 0 by a secant iteration on
    finite differences; the curvature must be bounded away from zero for a
    quadratic tangency."""
    def grad(c: float) -> float:
        return _slope_extrapolated(lambda t: _defect_at(chain, c, t), _FD_GRAD_STEP)

    # The finite-difference gradient bottoms out near rounding/h; accept a
    # stall once it is far below the anchor-condition tolerance.
    c = newton_safeguarded(grad, seed, ftol=1e-10)
    derivs = eval_cross_derivatives(chain, c, c)
    mu = _defect_at(chain, c, 0.0)
    q = 0.5 * _curvature_extrapolated(
        lambda t: _defect_at(chain, c, t), _FD_CURV_STEP
    )
    if abs(q) < _MIN_CURVATURE:
        raise TangencyError(f"degenerate fold: curvature {q!r} below {_MIN_CURVATURE}")
    z1 = (c, eval_cross(chain, c, c).B)
    d = evaluate(chain.henon, z1).det
    return TangencyData(chain, c, derivs.dA[0], derivs.dB[1], mu, q, d)


# ---------------------------------------------------------------------------
# single renormalization
# ---------------------------------------------------------------------------

def _chain_forward(chain: CrossMapChain, x0: float, y0: float) -> tuple[float, float]:
    """Machine-tight n-step forward image via the contracting backward solve.

    The explicit forward orbit seeds a secant solve of A(xi, y0) = x0; the
    backward route avoids the error amplification of the expanding forward
    pass."""
    f = chain.henon
    z = (x0, y0)
    for _ in range(chain.order):
        z = apply_map(f, z)
    seed = z[0]

    def g(xi: float) -> float:
        return eval_cross(chain, xi, y0).A - x0

    xi = newton_safeguarded(g, seed)
    return xi, eval_cross(chain, xi, y0).B


@dataclass(frozen=True)
class RenormData:
    word: str
    tangency: TangencyData
    M: int
    abar: float
    bbar: float

    @property
    def chain(self) -> CrossMapChain:
        return self.tangency.chain

    def chart(self, X: float, Y: float) -> tuple[float, float]:
        t = self.tangency
        return (t.c + t.sigma * X, t.H(t.sigma * X) + t.sigma * t.lam * Y)

    def chart_inv(self, x: float, y: float) -> tuple[float, float]:
        t = self.tangency
        X = (x - t.c) / t.sigma
        if t.lam == 0.0:
            return X, 0.0
        return X, (y - t.H(t.sigma * X)) / (t.sigma * t.lam)

    def renorm_map(self, X: float, Y: float) -> tuple[float, float]:
        """One full return in chart coordinates: one explicit fold step,
        then the contracted chain passage, then chart-out."""
        t = self.tangency
        f = t.chain.henon
        limit = ladder(f.a).require("beta") + 1.0
        if abs(t.c + t.sigma * X) > limit:
            raise DomainError(
                f"renormalization sample X={X!r} leaves the strip region"
            )
        z = self.chart(X, Y)
        w = apply_map(f, z)
        for p in (z, w):
            if max(abs(p[0]), abs(p[1])) > limit:
                raise DomainError(
                    f"renormalization sample {p!r} leaves the strip region"
                )
        xn, yn = _chain_forward(t.chain, w[0], w[1])
        Xp = (xn - t.c) / t.sigma
        if t.lam == 0.0:
            return Xp, X  # degenerate thickness: the exit height is the entry
        Yp = (yn - t.H(t.sigma * Xp)) / (t.sigma * t.lam)
        return Xp, Yp


def renormalize(f: HenonMap, word: str) -> RenormData:
    chain = factorize_chain(f, word)
    t = find_tangency(chain)
    n = chain.order
    M = f.m * (n + 1)
    abar = t.q * t.mu / (t.sigma * t.sigma)

    z = (eval_cross(chain, t.c, t.c).A, t.c)
    det_full = 1.0
    for _ in range(n + 1):
        det_full *= evaluate(f, z).det
        z = apply_map(f, z)
    if det_full < 0.0 and M % 2 == 0:
        raise DomainError(
            f"return determinant {det_full!r} is negative with even power {M}"
        )
    sign = 0.0 if f.b == 0.0 else math.copysign(1.0, f.b)
    bbar = sign * abs(det_full) ** (1.0 / M) if det_full != 0.0 else 0.0
    return RenormData(",".join(chain.piece.word), t, M, abar, bbar)


def delta_star(
    data: RenormData,
    R: float = 2.5,
    grid: int = 33,
) -> float:
    """Sup-norm deviation of the chart return from the quadratic family
    (X, Y) |-> (X^2 + abar - bbar^M Y, X) over the natural window."""
    # Chart thickness sigma*lam is the plane separation per unit Y. Once it
    # drops toward the rounding floor of the exit-height evaluations (at
    # b = 0 exactly, or ~1e-29 for deep words at small b, where the two
    # B-values agree to the last bit), the return carries no resolvable
    # Y-dependence: compare the X-component only, over a plain [-R, R]^2.
    thickness = abs(data.tangency.sigma * data.tangency.lam)
    resolvable = thickness >= 1e-20
    bbarM = data.bbar ** data.M if resolvable else 0.0
    y_extent = R / abs(bbarM) if bbarM != 0.0 else R
    worst = 0.0
    for i in range(grid):
        X = -R + 2.0 * R * i / (grid - 1)
        for j in range(grid):
            Y = -y_extent + 2.0 * y_extent * j / (grid - 1)
            Xp, Yp = data.renorm_map(X, Y)
            model = X * X + data.abar - bbarM * Y
            worst = max(worst, abs(Xp - model))
            if resolvable:
                worst = max(worst, abs(Yp - X))
    return worst


# ---------------------------------------------------------------------------
# parameter solves
# ---------------------------------------------------------------------------

def solve_mu_zero(
    build: Callable[[float], HenonMap],
    word: str,
    a_lo: float,
    a_hi: float,
    coarse: int = 24,
    rtol: float = 1e-11,
) -> float:
    """Parameter at which the word's fold defect vanishes."""

    def mu(a: float) -> float:
        return find_tangency(factorize_chain(build(a), word)).mu

    values = []
    for k in range(coarse + 1):
        a = a_lo + (a_hi - a_lo) * k / coarse
        values.append((a, mu(a)))
    for (a0, m0), (a1, m1) in zip(values, values[1:]):
        if m0 == 0.0:
            return a0
        if m0 * m1 < 0.0:
            root = bisect(mu, a0, a1, rtol=rtol)
            # A secant polish drives the defect itself to rounding level,
            # well below what the bisection interval guarantees; downstream
            # quantities amplify parameter error by up to ~1e6.
            return newton_safeguarded(mu, root, bracket=(a0, a1), rtol=1e-15)
    raise ConvergenceError(
        f"defect of {word!r} has no root in [{a_lo!r}, {a_hi!r}]"
    )


@dataclass(frozen=True)
class RenormWindow:
    a_star: float
    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo


def renorm_window(
    build: Callable[[float], HenonMap],
    word: str,
    a_lo: float,
    a_hi: float,
    coarse: int = 48,
) -> RenormWindow:
    """Parameter window over which the renormalized value sweeps the full
    quadratic range [-2, 1/4]."""
    a_star = solve_mu_zero(build, word, a_lo, a_hi)

    def abar(a: float) -> float:
        return renormalize(build(a), word).abar

    samples = []
    for k in range(coarse + 1):
        a = a_lo + (a_hi - a_lo) * k / coarse
        samples.append((a, abar(a)))

    def edge(level: float) -> float:
        best = None
        for (a0, v0), (a1, v1) in zip(samples, samples[1:]):
            if (v0 - level) * (v1 - level) <= 0.0 and v0 != v1:
                root = bisect(lambda a: abar(a) - level, a0, a1, rtol=1e-11)
                if best is None or abs(root - a_star) < abs(best - a_star):
                    best = root
        if best is None:
            raise ConvergenceError(
                f"renormalized value never reaches {level!r} on [{a_lo!r}, {a_hi!r}]"
            )
        return best

    ends = sorted((edge(0.25), edge(-2.0)))
    return RenormWindow(a_star, ends[0], ends[1])


# ---------------------------------------------------------------------------
# affine conjugacy
# ---------------------------------------------------------------------------

def conjugate_rescale(f: HenonMap, c: float, q: float) -> HenonMap:
    """Conjugate by the affine chart centered at the point with both
    coordinates c and scaled by q. Renormalized parameters are invariant
    under this change of coordinates."""
    bmc = f.bm * c
    r = 1.0 / q
    zeta = f.zeta

    def zv(x: float, v: float) -> float:
        return (r - 1.0) * x * x + 2.0 * c * x + q * zeta.value(c + x * r, bmc + v * r)

    def zdx(x: float, v: float) -> float:
        return 2.0 * (r - 1.0) * x + 2.0 * c + zeta.dx(c + x * r, bmc + v * r)

    def zdv(x: float, v: float) -> float:
        return zeta.dv(c + x * r, bmc + v * r)

    def zdxx(x: float, v: float) -> float:
        return 2.0 * (r - 1.0) + zeta.dxx(c + x * r, bmc + v * r) * r

    def zdxv(x: float, v: float) -> float:
        return zeta.dxv(c + x * r, bmc + v * r) * r

    def zdvv(x: float, v: float) -> float:
        return zeta.dvv(c + x * r, bmc + v * r) * r

    new_zeta = Field2(zv, zdx, zdv, zdxx, zdxv, zdvv)

    if f.xi is ZERO_FIELD:
        new_xi = ZERO_FIELD
    else:
        xi = f.xi
        new_xi = Field2(
            lambda x, v: q * xi.value(c + x * r, bmc + v * r),
            lambda x, v: xi.dx(c + x * r, bmc + v * r),
            lambda x, v: xi.dv(c + x * r, bmc + v * r),
            lambda x, v: xi.dxx(c + x * r, bmc + v * r) * r,
            lambda x, v: xi.dxv(c + x * r, bmc + v * r) * r,
            lambda x, v: xi.dvv(c + x * r, bmc + v * r) * r,
        )
    a_new = q * (c * c + f.a - c - bmc)
    return HenonMap(a_new, f.b, f.m, new_zeta, new_xi)


# ---------------------------------------------------------------------------
# two-word cycles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiRenormData:
    words: tuple[str, ...]
    chains: tuple[CrossMapChain, ...]
    c: tuple[float, ...]
    sigma: tuple[float, ...]
    lam: tuple[float, ...]
    gamma: tuple[float, ...]
    mu: tuple[float, ...]
    q: tuple[float, ...]
    d: tuple[float, ...]
    abar: tuple[float, ...]
    bbar: tuple[float, ...]

    @property
    def count(self) -> int:
        return len(self.words)

    def H(self, i: int, t: float) -> float:
        prev = self.c[(i - 1) % self.count]
        return eval_cross(self.chains[i], self.c[i] + t, prev).B

    def chart(self, i: int, X: float, Y: float) -> tuple[float, float]:
        gi = self.gamma[i]
        gnext = self.gamma[(i + 1) % self.count]
        return (self.c[i] + gi * X, self.H(i, gi * X) + gnext * self.lam[i] * Y)

    def chart_inv(self, i: int, x: float, y: float) -> tuple[float, float]:
        gi = self.gamma[i]
        gnext = self.gamma[(i + 1) % self.count]
        X = (x - self.c[i]) / gi
        if self.lam[i] == 0.0:
            return X, 0.0
        return X, (y - self.H(i, gi * X)) / (gnext * self.lam[i])

    def transition(self, i: int, X: float, Y: float) -> tuple[float, float]:
        """Chart-i to chart-(i+1) return: one fold step, then the passage
        through the next word's strip."""
        nxt = (i + 1) % self.count
        f = self.chains[i].henon
        z = self.chart(i, X, Y)
        w = apply_map(f, z)
        xn, yn = _chain_forward(self.chains[nxt], w[0], w[1])
        Xp = (xn - self.c[nxt]) / self.gamma[nxt]
        if self.lam[nxt] == 0.0:
            return Xp, X
        nxt2 = (nxt + 1) % self.count
        Yp = (yn - self.H(nxt, self.gamma[nxt] * Xp)) / (
            self.gamma[nxt2] * self.lam[nxt]
        )
        return Xp, Yp


def _cross_defect(
    chains: Sequence[CrossMapChain],
    cs: Sequence[float],
    i: int,
    t: float,
) -> float:
    """Fold defect departing word i toward word i+1 in the cycle."""
    count = len(chains)
    prev = cs[(i - 1) % count]
    nxt = (i + 1) % count
    f = chains[i].henon
    b_val = eval_cross(chains[i], cs[i] + t, prev).B
    entry = eval_cross(chains[nxt], cs[nxt], cs[i] + t).A
    return _first_coord(f, cs[i] + t, b_val) - entry


def multi_renormalize(
    f: HenonMap,
    words: Sequence[str],
    anchor_seed: Sequence[float] | None = None,
    anchor_rtol: float = 1e-12,
) -> MultiRenormData:
    """Renormalize a cycle of words to a cycle of quadratic-family maps.

    The anchors solve all fold-tangency conditions jointly, starting from
    ``anchor_seed`` when given; the chart scales gamma_i are the cyclically
    weighted geometric means of the cross-map slopes, satisfying
    gamma_i^2 = gamma_{i+1} sigma_{i+1}.  The rescaled parameters are
    stationary with respect to the anchors, so ``anchor_rtol`` can be
    relaxed when many nearby maps are renormalized in sequence."""
    chains = tuple(factorize_chain(f, w) for w in words)
    count = len(chains)

    def grads(cs: Sequence[float]) -> tuple[float, ...]:
        return tuple(
            _slope_extrapolated(
                lambda t, k=i: _cross_defect(chains, cs, k, t), _FD_GRAD_STEP
            )
            for i in range(count)
        )

    if count == 1:
        t = find_tangency(chains[0], seed=anchor_seed[0] if anchor_seed else 0.0)
        cs: tuple[float, ...] = (t.c,)
    else:
        seed = list(anchor_seed) if anchor_seed is not None else [0.0] * count
        cs = tuple(newton2(grads, seed, rtol=anchor_rtol))

    sigma = []
    lam = []
    mu = []
    q = []
    d = []
    for i in range(count):
        prev = cs[(i - 1) % count]
        derivs = eval_cross_derivatives(chains[i], cs[i], prev)
        sigma.append(derivs.dA[0])
        lam.append(derivs.dB[1])
        mu.append(_cross_defect(chains, cs, i, 0.0))
        qi = 0.5 * _curvature_extrapolated(
            lambda t, k=i: _cross_defect(chains, cs, k, t), _FD_CURV_STEP
        )
        if abs(qi) < _MIN_CURVATURE:
            raise TangencyError(f"degenerate fold at cycle index {i}: curvature {qi!r}")
        q.append(qi)
        z1 = (cs[i], eval_cross(chains[i], cs[i], prev).B)
        d.append(evaluate(f, z1).det)

    denom = 1.0 - 2.0 ** (-count)
    gamma = []
    for i in range(count):
        mag = 1.0
        for r in range(1, count + 1):
            mag *= abs(sigma[(i + r) % count]) ** (2.0 ** (-r) / denom)
        gamma.append(math.copysign(mag, sigma[i]))

    abar = []
    bbar = []
    for i in range(count):
        gi2 = gamma[i] * gamma[i]
        abar.append(q[i] * mu[i] / gi2)
        bbar.append(d[i] * lam[i] * gamma[(i + 1) % count] / gi2)

    return MultiRenormData(
        tuple(",".join(ch.piece.word) for ch in chains),
        chains,
        cs,
        tuple(sigma),
        tuple(lam),
        tuple(gamma),
        tuple(mu),
        tuple(q),
        tuple(d),
        tuple(abar),
        tuple(bbar),
    )


# ---------------------------------------------------------------------------
# simultaneous tangencies and twin attractors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DoubleTangency:
    a: float
    b: float
    mu1: float
    mu2: float
    dmu_db: float


def double_tangency(
    build: Callable[[float, float], HenonMap],
    word1: str,
    word2: str,
    seed: tuple[float, float],
) -> DoubleTangency:
    """Parameter point where the folds of two words are tangent at once.

    Runs a two-dimensional Newton iteration on both fold defects from the
    given (a, b) seed. ``dmu_db`` records the transversality of the defect
    difference across the crossing."""
    trace: list[tuple[float, float, float, float]] = []

    def both(x: Sequence[float]) -> tuple[float, float]:
        f = build(x[0], x[1])
        m1 = find_tangency(factorize_chain(f, word1)).mu
        m2 = find_tangency(factorize_chain(f, word2)).mu
        trace.append((x[0], x[1], m1, m2))
        return (m1, m2)

    try:
        a, b = newton2(both, seed, rtol=1e-13)
        mu1, mu2 = both([a, b])
    except HenonLabError as exc:
        raise NoCrossingError(
            f"defects of {word1!r} and {word2!r} admit no common zero "
            f"near {seed!r}: {exc}",
            trace,
        ) from exc
    hb = 1e-7 * max(1.0, abs(b))
    gp = both([a, b + hb])
    gm = both([a, b - hb])
    dmu_db = ((gp[0] - gp[1]) - (gm[0] - gm[1])) / (2.0 * hb)
    return DoubleTangency(a, b, mu1, mu2, dmu_db)


@dataclass(frozen=True)
class TwinResult:
    word_minus: str
    word_plus: str
    eta: float
    bracket: tuple[float, float]
    b0: float
    a_at_b0: float
    a: float
    b: float
    abar_minus: float
    abar_plus: float
    curve_abar_minus: tuple[float, ...]
    report: AttractorReport

    @property
    def periods(self) -> tuple[int, ...]:
        return tuple(sorted(c.period for c in self.report.cycles))


def _twin_words(k: int, j: int, orientation: float) -> tuple[str, str]:
    gap = f"bm{j}" if orientation >= 0.0 else f"bp{j}"
    return f"c{k}", f"c{k},{gap},bm0"


def twin_find(
    build: Callable[[float, float], HenonMap],
    k: int = 1,
    j: int = 0,
    b_hat: float = 1e-2,
    a_range: tuple[float, float] | None = None,
    target: float = -0.5,
    samples: int = 7,
) -> TwinResult:
    """Locate a parameter point carrying two coexisting attracting cycles.

    The short word's fold-defect root traces a curve a(b); the long word's
    root crosses it at some b0 inside [|b_hat| eta^(3/2), |b_hat| eta^(1/2)]
    (widened tenfold on retry). Moving along the short word's curve past b0
    sweeps the long word's renormalized value through the attracting range;
    the returned point puts it at ``target`` while the short word stays at
    its window center. Both predicted cycles are then located directly."""
    word_minus, word_plus = _twin_words(k, j, b_hat)
    if a_range is None:
        _, a2 = special_parameters()
        a_range = (a2 + 5e-4, -1.82)

    def at(a: float, b: float) -> HenonMap:
        return build(a, b)

    a_m = solve_mu_zero(lambda a: at(a, 0.0), word_minus, *a_range)
    a_p = solve_mu_zero(lambda a: at(a, 0.0), word_plus, *a_range)

    hi1 = piece_1d(f"c{j + 1}", a_m).hi
    hi2 = piece_1d(f"c{j + 2}", a_m).hi
    eta = 0.5 * math.sqrt(hi1 - hi2)

    sign = 1.0 if b_hat >= 0.0 else -1.0
    mag = abs(b_hat)
    state = {"am": a_m, "ap": a_p}

    def trace_roots(b: float) -> tuple[float, float]:
        half = 4e-3
        state["am"] = solve_mu_zero(
            lambda a: at(a, b), word_minus, state["am"] - half, state["am"] + half,
            coarse=12,
        )
        state["ap"] = solve_mu_zero(
            lambda a: at(a, b), word_plus, state["ap"] - half, state["ap"] + half,
            coarse=12,
        )
        return state["am"], state["ap"]

    def gap(b: float) -> float:
        am, ap = trace_roots(b)
        return am - ap

    def scan(lo: float, hi: float, n: int) -> tuple[float, float] | None:
        ratio = (hi / lo) ** (1.0 / (n - 1))
        bs = [sign * lo * ratio**i for i in range(n)]
        vals = [(b, gap(b)) for b in bs]
        scanned.extend(vals)
        for (b0, g0), (b1, g1) in zip(vals, vals[1:]):
            if g0 == 0.0:
                return (b0, b0)
            if g0 * g1 < 0.0:
                return (b0, b1)
        return None

    scanned: list[tuple[float, float]] = []
    lo, hi = mag * eta**1.5, mag * math.sqrt(eta)
    found = scan(lo, hi, samples)
    if found is None:
        found = scan(lo / 10.0, hi * 10.0, 2 * samples)
    if found is None:
        raise NoCrossingError(
            f"root curves of {word_minus!r} and {word_plus!r} do not cross "
            f"for b in [{sign * lo / 10.0!r}, {sign * hi * 10.0!r}]",
            scanned,
        )
    b0 = bisect(gap, found[0], found[1], rtol=1e-10)
    a_at_b0 = trace_roots(b0)[0]

    curve_samples = []
    for off in (-3e-5, -1e-5, 0.0, 1e-5, 3e-5):
        b = b0 * (1.0 + off)
        am = trace_roots(b)[0]
        curve_samples.append(renormalize(at(am, b), word_minus).abar)

    def plus_value(b: float) -> float:
        am = trace_roots(b)[0]
        return renormalize(at(am, b), word_plus).abar

    def locate(direction: float) -> tuple[float, float] | None:
        prev_b, prev_h = b0, plus_value(b0) - target
        for u in (1e-8, 3e-8, 1e-7, 3e-7, 1e-6, 3e-6, 1e-5, 3e-5, 1e-4, 3e-4):
            b = b0 * (1.0 + direction * u)
            h = plus_value(b) - target
            if prev_h == 0.0:
                return (prev_b, prev_b)
            if prev_h * h < 0.0:
                return (prev_b, b)
            prev_b, prev_h = b, h
        return None

    hit = locate(1.0) or locate(-1.0)
    if hit is None:
        raise NoCrossingError(
            f"renormalized value of {word_plus!r} never reaches {target!r} "
            f"near b0={b0!r}",
            scanned,
        )
    def off_target(b: float) -> float:
        return plus_value(b) - target

    # The target value moves by ~1e6 per unit b, so the bisected interval
    # alone leaves a visible residual; a secant polish removes it.
    b_star = bisect(off_target, hit[0], hit[1], rtol=1e-12)
    b_star = newton_safeguarded(off_target, b_star, bracket=hit, rtol=1e-15)
    a_star = trace_roots(b_star)[0]
    chosen = at(a_star, b_star)
    abar_minus = renormalize(chosen, word_minus).abar
    abar_plus = renormalize(chosen, word_plus).abar

    seeds = []
    for word in (word_minus, word_plus):
        chain = factorize_chain(chosen, word)
        t = find_tangency(chain)
        seeds.append((t.c, eval_cross(chain, t.c, t.c).B))
    n_plus = factorize_chain(chosen, word_plus).order
    report = find_attractors(chosen, seeds, max_period=max(32, n_plus + 6))

    return TwinResult(
        word_minus,
        word_plus,
        eta,
        (sign * lo, sign * hi),
        b0,
        a_at_b0,
        a_star,
        b_star,
        abar_minus,
        abar_plus,
        tuple(curve_samples),
        report,
    )


# ---------------------------------------------------------------------------
# cone-expansion diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConeCertificate:
    counts: dict
    expansion_min: dict
    violations: dict
    kappa: float
    excluded_disk: int
    unclassified: int


def _arrival_slope(f: HenonMap, z: tuple[float, float]) -> float | None:
    """Slope of the incoming expanding direction at z.

    The previous point of any orbit through z has first coordinate z_y, so
    the image of a horizontal vector there has slope 1/(2 z_y) up to the
    field corrections; near the fold line the direction is not anchored."""
    y = z[1]
    denom = 2.0 * y + f.zeta.dx(y, f.bm * z[0])
    if abs(denom) < 0.1:
        return None
    return 1.0 / denom


def certify_cone_expansion(
    f: HenonMap,
    j: int = 0,
    grid: tuple[int, int] = (61, 9),
    r_disk: float = 0.1,
    fat: float | None = None,
) -> ConeCertificate:
    """Sampled expansion/invariance diagnostic for the horizontal cone field.

    Sample points of the core are classified by the strip their position or
    one-step image lands in: K1 = the symbol strips away from the fold with
    passage time equal to the word order; K2 = fold points feeding the deep
    central strip; K3 = fold points feeding the shallow central strip,
    excluding disks of radius ``r_disk`` around the tangencies. Cone
    boundary vectors (1, s +- eta_j^2) are pushed by the orbit Jacobian;
    the report carries per-class minimum expansion, count of arrivals
    outside the cone, and the fitted per-step contraction rate kappa of the
    K1 growth law (kappa < 1 means expansion builds exponentially with
    passage time). Sampled evidence only, not a proof."""
    lad = ladder(f.a)
    alpha0 = lad.require("alpha0")
    if fat is None:
        fat = 10.0 * abs(f.bm) + 1e-9

    alphabet = ["s-", "s+"]
    for m in range(j + 1):
        alphabet.extend([f"bm{m}", f"bp{m}"])
    segs = {w: piece_1d(w, f.a) for w in alphabet}
    deep = piece_1d(f"c{j + 2}", f.a)
    shallow = piece_1d("c0", f.a)

    hi1 = piece_1d(f"c{j + 1}", f.a).hi
    hi2 = piece_1d(f"c{j + 2}", f.a).hi
    eta = 0.5 * math.sqrt(hi1 - hi2)
    aperture = eta * eta

    def in_seg(x: float, piece) -> bool:
        return piece.lo - fat <= x <= piece.hi + fat

    counts = {"K1": 0, "K2": 0, "K3": 0}
    exp_min = {"K1": math.inf, "K2": math.inf, "K3": math.inf}
    violations = {"K1": 0, "K2": 0, "K3": 0}
    k1_points: list[tuple[int, float]] = []
    excluded = 0
    unclassified = 0

    nx, ny = grid
    for ix in range(nx):
        x = -0.98 * alpha0 + 1.96 * alpha0 * ix / (nx - 1)
        for iy in range(ny):
            y = -0.9 * alpha0 + 1.8 * alpha0 * iy / (ny - 1)
            z = (x, y)
            tag = None
            tau = 0
            for w, piece in segs.items():
                if in_seg(x, piece):
                    tag, tau = "K1", piece.order
                    break
            if tag is None:
                image_x = apply_map(f, z)[0]
                if in_seg(image_x, deep):
                    tag, tau = "K2", 1 + deep.order
                elif in_seg(image_x, shallow):
                    if abs(x) < r_disk:
                        excluded += 1
                        continue
                    tag, tau = "K3", 1 + shallow.order
            if tag is None:
                unclassified += 1
                continue
            slope = _arrival_slope(f, z)
            if slope is None:
                unclassified += 1
                continue

            worst = math.inf
            arrived = z
            ok = True
            for v_off in (-aperture, aperture):
                v = (1.0, slope + v_off)
                w_vec = v
                arrived = z
                for _ in range(tau):
                    jac = evaluate(f, arrived).jacobian
                    w_vec = (
                        jac[0][0] * w_vec[0] + jac[0][1] * w_vec[1],
                        jac[1][0] * w_vec[0] + jac[1][1] * w_vec[1],
                    )
                    arrived = apply_map(f, arrived)
                growth = math.hypot(*w_vec) / math.hypot(*v)
                worst = min(worst, growth)
                out_slope = _arrival_slope(f, arrived)
                if (
                    w_vec[0] == 0.0
                    or out_slope is None
                    or abs(w_vec[1] / w_vec[0] - out_slope) > aperture
                ):
                    ok = False
            counts[tag] += 1
            exp_min[tag] = min(exp_min[tag], worst)
            if not ok:
                violations[tag] += 1
            if tag == "K1":
                k1_points.append((tau, math.log(worst)))

    if len({t for t, _ in k1_points}) >= 2:
        n = len(k1_points)
        sx = sum(t for t, _ in k1_points)
        sy = sum(g for _, g in k1_points)
        sxx = sum(t * t for t, _ in k1_points)
        sxy = sum(t * g for t, g in k1_points)
        slope_fit = (n * sxy - sx * sy) / (n * sxx - sx * sx)
        kappa = math.exp(-slope_fit)
    else:
        kappa = math.nan

    return ConeCertificate(
        counts,
        {k: (v if v != math.inf else math.nan) for k, v in exp_min.items()},
        violations,
        kappa,
        excluded,
        unclassified,
    )
