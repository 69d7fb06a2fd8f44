"""Jacob's ladder phi_2: the x solving W(x) = I(T), and its inverse.

Single points are solved by Brent's method on the increasing map
x -> W(x) - I(T). Dense evaluation along a grid goes through ``DenseLadder``,
which replaces W and the bulk of W' by Chebyshev interpolants on the range
of phi_2 and inverts the W interpolant by safeguarded Newton steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from scipy.optimize import brentq

from .errors import BracketError, ConvergenceError, DomainError
from .weighted import (
    NEGLIGIBLE,
    Z4_SLOPE,
    WeightedMomentContext,
    _bulk,
    phi2_prime,
    weighted_fourth_moment,
)

LADDER_FLOOR = 100.0
# phi_2(100) is about 74.6, so the inverse must accept heights below the ladder floor
INVERSE_FLOOR = 50.0
BRACKET_LO = 0.5
BRACKET_HI = 2.0
MAX_EVALS = 100
EPS = np.finfo(float).eps


@dataclass(frozen=True)
class LadderPoint:
    T: float
    phi2: float
    residual: float
    iterations: int

    @property
    def in_bracket(self) -> bool:
        """|phi2 - T| <= T/4."""
        return abs(self.phi2 - self.T) <= 0.25 * self.T

    @property
    def in_inner_bracket(self) -> bool:
        """4T/5 < phi2 < 5T/4, the sharper form the T/4 bracket is derived from."""
        return 0.8 * self.T < self.phi2 < 1.25 * self.T


@dataclass(frozen=True)
class ReverseInterval:
    T: float
    U: float
    T_ring: float
    TU_ring: float


def _monotone_root(f, x0, slope, lo, hi, xtol):
    """Root of an increasing f in [lo, hi], starting the bracket search at x0.

    The search steps from x0 along the estimated slope and doubles the step
    until the sign changes, so a good start costs two or three evaluations
    before Brent's method takes over. Returns (root, f(root), evaluations).
    """
    memo = {}

    def g(x):
        x = float(x)
        if x not in memo:
            if len(memo) >= MAX_EVALS:
                raise ConvergenceError("root search exceeded its evaluation budget", value=x)
            memo[x] = f(x)
        return memo[x]

    f0 = g(x0)
    if f0 == 0.0:
        return x0, 0.0, len(memo)
    step = -f0 / slope
    a, fa = x0, f0
    while True:
        b = min(max(a + step, lo), hi)
        if b == a:
            side = "upper" if f0 < 0 else "lower"
            raise BracketError(f"no sign change up to the {side} end of [{lo:.6g}, {hi:.6g}]")
        fb = g(b)
        if fb == 0.0:
            return b, 0.0, len(memo)
        if (fb > 0) != (fa > 0):
            break
        a, fa = b, fb
        step *= 2.0
    left, right = (a, b) if a < b else (b, a)
    root = brentq(g, left, right, xtol=xtol, rtol=4 * EPS, maxiter=MAX_EVALS)
    return root, g(root), len(memo)


def _check_height(T, name="T", floor=LADDER_FLOOR):
    T = float(T)
    if not math.isfinite(T) or not T >= floor:
        raise DomainError(f"{name} must be >= {floor:g}")
    return T


def _growth_slope(value, x):
    # d/dx of x log^4 x scaled to value
    return value / x * (1.0 + 4.0 / math.log(x))


def solve_phi2(T: float, ctx: WeightedMomentContext, tol: float = 1e-9) -> LadderPoint:
    """phi_2(T): the x in [T/2, 2T] with W(x) = I(T)."""
    T = _check_height(T)
    target = ctx.table.fourth_moment(T)

    def f(x):
        return weighted_fourth_moment(x, ctx) - target

    w_T = f(T) + target
    root, froot, evals = _monotone_root(
        f, T, _growth_slope(w_T, T), BRACKET_LO * T, BRACKET_HI * T, xtol=1e-3 * tol * T
    )
    residual = abs(froot) / target
    if residual > tol:
        raise ConvergenceError(f"phi2({T:g}) residual {residual:.3g} above {tol:g}", value=root, error_estimate=residual)
    return LadderPoint(T=T, phi2=root, residual=residual, iterations=evals)


def inverse_ladder(y: float, ctx: WeightedMomentContext, tol: float = 1e-9) -> float:
    """M_2(y): the T in [y/2, 2y] with I(T) = W(y), for y >= INVERSE_FLOOR."""
    return _inverse_point(y, ctx, tol)[0]


def _inverse_point(y, ctx, tol):
    y = _check_height(y, "y", INVERSE_FLOOR)
    target = weighted_fourth_moment(y, ctx)

    def f(T):
        return ctx.table.fourth_moment(T) - target

    i_y = f(y) + target
    root, froot, evals = _monotone_root(
        f, y, _growth_slope(i_y, y), BRACKET_LO * y, BRACKET_HI * y, xtol=1e-3 * tol * y
    )
    residual = abs(froot) / target
    if residual > tol:
        raise ConvergenceError(f"M2({y:g}) residual {residual:.3g} above {tol:g}", value=root, error_estimate=residual)
    return root, residual, evals


def phi2_derivative(t: float, ctx: WeightedMomentContext) -> float:
    """phi_2'(t) = Z^4(t) / W'(phi_2(t))."""
    t = _check_height(t, "t")
    y = solve_phi2(t, ctx).phi2
    return ctx.evaluator.z4(t) / phi2_prime(y, ctx)


def reverse_interval(T: float, U: float, ctx: WeightedMomentContext, tol: float = 1e-9) -> ReverseInterval:
    """Preimage [M_2(T), M_2(T+U)] of [T, T+U] under phi_2."""
    T = _check_height(T)
    U = float(U)
    if not 0 < U <= T:
        raise DomainError("reverse interval needs 0 < U <= T")
    return ReverseInterval(T=T, U=U, T_ring=inverse_ladder(T, ctx, tol), TU_ring=inverse_ladder(T + U, ctx, tol))


def chord_slope(T: float, U: float, ctx: WeightedMomentContext) -> float:
    """(phi_2(T+U) - phi_2(T)) / U."""
    T = _check_height(T)
    U = float(U)
    if not U > 0:
        raise DomainError("chord slope needs U > 0")
    return (solve_phi2(T + U, ctx).phi2 - solve_phi2(T, ctx).phi2) / U


# ------------------------------------------------------------------ dense


def chebyshev_fit(func, lo, hi, rel_tol=1e-14, max_degree=512):
    """Chebyshev interpolant of a smooth func on [lo, hi], degree doubled until the tail is small.

    Returns (series, tail) where tail is the size of the last retained
    coefficients relative to the largest.
    """
    deg = 16
    while True:
        series = npcheb.Chebyshev.interpolate(func, deg, domain=[lo, hi])
        c = np.abs(series.coef)
        tail = c[-3:].max() / c.max()
        if tail <= rel_tol or deg >= max_degree:
            return series, tail
        deg *= 2


class DenseLadder:
    """phi_2 and phi_2' on a whole range of heights at once.

    ``y_range`` is the range of phi_2 to cover; queries at heights t whose
    I(t) falls outside W(y_range) raise a domain error.
    """

    def __init__(self, ctx: WeightedMomentContext, y_lo: float, y_hi: float):
        y_lo = _check_height(y_lo, "y_lo")
        y_hi = float(y_hi)
        if not y_hi > y_lo:
            raise DomainError("dense ladder needs y_hi > y_lo")
        self.ctx = ctx
        self.y_lo, self.y_hi = y_lo, y_hi
        self._W, self.w_tail = chebyshev_fit(np.vectorize(lambda y: weighted_fourth_moment(y, ctx)), y_lo, y_hi)
        self._dW = self._W.deriv()

        def bulk(y):
            return _bulk(y, ctx, (0.0, 1.0, 0.0))[0] / (y * y)

        self._B, self.bulk_tail = chebyshev_fit(np.vectorize(bulk), y_lo, y_hi)
        grid = np.linspace(y_lo, y_hi, 257)
        self._grid = grid
        self._grid_W = self._W(grid)
        if np.any(np.diff(self._grid_W) <= 0):
            raise ConvergenceError("weighted moment interpolant is not increasing")

    @classmethod
    def for_heights(cls, ctx, t_lo, t_hi, pad=1e-3):
        lo = solve_phi2(t_lo, ctx).phi2
        hi = solve_phi2(t_hi, ctx).phi2
        return cls(ctx, max(LADDER_FLOOR, lo * (1 - pad)), hi * (1 + pad))

    def invert(self, targets):
        """y with W(y) = target, vectorized."""
        targets = np.asarray(targets, dtype=float)
        if np.any(targets < self._grid_W[0]) or np.any(targets > self._grid_W[-1]):
            raise DomainError("requested heights fall outside the dense ladder range")
        y = np.interp(targets, self._grid_W, self._grid)
        for _ in range(50):
            step = (self._W(y) - targets) / self._dW(y)
            y = np.clip(y - step, self.y_lo, self.y_hi)
            if np.all(np.abs(step) <= 4 * EPS * y):
                break
        return y

    def phi2(self, t):
        return self.invert(self.ctx.table.fourth_moment(np.asarray(t, dtype=float)))

    def phi2_prime(self, y):
        """W'(y) from the bulk interpolant plus the exact boundary term."""
        y = np.asarray(y, dtype=float)
        mu_f = self.ctx.mu
        out = self._B(y)
        mu = np.vectorize(mu_f.mu, otypes=[float])(y)
        d1 = np.vectorize(lambda v: mu_f.mu_derivatives(v)[0], otypes=[float])(y)
        damp = np.exp(-mu / y)
        live = damp * d1 * Z4_SLOPE * mu > NEGLIGIBLE * np.abs(out)
        if np.any(live):
            z4 = self.ctx.evaluator.z4(mu[live])
            out = np.array(out, dtype=float, copy=True)
            out[live] = out[live] + z4 * damp[live] * d1[live]
        return out

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        return self.ctx.evaluator.z4(t) / self.phi2_prime(self.phi2(t))
