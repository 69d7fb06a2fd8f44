"""Exponentially weighted fourth moments and the derivatives of W.

For a growth function mu(y) = 4 y^w1 log^w2 y the weighted moment is

    W(x) = int_0^{mu(x)} Z(t)^4 exp(-t/x) dt,

and differentiating under the integral sign gives

    W'(x)  = x^-2 int_0^mu t Z^4 e^{-t/x} dt + Z^4(mu) e^{-mu/x} mu'(x),
    W''(x) = J(x) + Q(x),
    J(x)   = x^-3 int_0^mu (t^2/x - 2t) Z^4 e^{-t/x} dt,

where Q collects every term produced by the moving upper limit. All
integrals over [0, mu] are cut at L = min(mu, TAIL_FACTOR * x); the dropped
part is bounded with Z(t)^4 <= 256 t / (2 pi) and a check makes sure it is
far below double precision of the kept part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc, gamma

from .errors import AccuracyError, DomainError
from .moments import MomentTable
from .quadrature import PanelPolicy
from .zeta_core import DEFAULT_EVALUATOR, ZEvaluator

TAIL_FACTOR = 60.0
Z4_SLOPE = 256.0 / (2.0 * math.pi)  # Z(t)^4 <= Z4_SLOPE * t
TAIL_REL_LIMIT = 1e-13
# boundary terms smaller than this fraction of the bulk are below rounding
NEGLIGIBLE = 1e-18
DERIV_STEP = 1e-4


@dataclass(frozen=True)
class MuFamily:
    """mu(y) = 4 y^omega1 (log y)^omega2 for y >= 2."""

    omega1: float = 1.0
    omega2: float = 1.0

    def __post_init__(self):
        if not (self.omega1 >= 1 and self.omega2 >= 1):
            raise DomainError("omega1 and omega2 must both be >= 1")
        if not (math.isfinite(self.omega1) and math.isfinite(self.omega2)):
            raise DomainError("omega1 and omega2 must be finite")

    def _check(self, y):
        y = float(y)
        if not y >= 2:
            raise DomainError("mu is defined for y >= 2")
        return y

    def mu(self, y: float) -> float:
        y = self._check(y)
        return 4.0 * y**self.omega1 * math.log(y) ** self.omega2

    def mu_derivatives(self, y: float):
        """(mu'(y), mu''(y))."""
        y = self._check(y)
        a, b = self.omega1, self.omega2
        L = math.log(y)
        d1 = 4.0 * y ** (a - 1) * L ** (b - 1) * (a * L + b)
        d2 = 4.0 * y ** (a - 2) * L ** (b - 2) * ((a - 1) * L * (a * L + b) + (b - 1) * (a * L + b) + a * L)
        return d1, d2


@dataclass
class WeightedMomentContext:
    """Everything a weighted-moment evaluation needs.

    ``table`` is the shared cell store; it is created from ``evaluator`` and
    ``policy`` when not given and must agree with them when given.
    """

    mu: MuFamily = field(default_factory=MuFamily)
    evaluator: ZEvaluator = DEFAULT_EVALUATOR
    policy: PanelPolicy = field(default_factory=PanelPolicy)
    table: MomentTable | None = None
    threads: int = 1

    def __post_init__(self):
        if self.table is None:
            self.table = MomentTable(self.evaluator, self.policy, threads=self.threads)
        elif self.table.evaluator != self.evaluator or self.table.policy != self.policy:
            raise DomainError("moment table was built with a different evaluator or policy")

    @property
    def fingerprint(self) -> str:
        return f"{self.table.fingerprint};mu=({self.mu.omega1!r},{self.mu.omega2!r})"


def upper_limit(x: float, ctx: WeightedMomentContext) -> float:
    return min(ctx.mu.mu(x), TAIL_FACTOR * x)


def truncation_tail_bound(x: float, cut: float, power: int) -> float:
    """Bound on int_cut^inf t^power Z^4 e^{-t/x} dt using Z^4 <= Z4_SLOPE t."""
    s = power + 2
    return Z4_SLOPE * x**s * gamma(s) * gammaincc(s, cut / x)


def j_poly(y: float):
    """Coefficients (p0, p1, p2) of t^2/y - 2t, the polynomial part of the J kernel."""
    return (0.0, -2.0, 1.0 / y)


def j_kernel(t, y: float):
    """(t^2/y - 2t) e^{-t/y}; extrema at t = (2 -+ sqrt 2) y."""
    p0, p1, p2 = j_poly(y)
    return (p0 + t * (p1 + t * p2)) * np.exp(-np.asarray(t, dtype=float) / y)


def _bulk(x, ctx, poly):
    x = float(x)
    mu = ctx.mu.mu(x)
    cut = min(mu, TAIL_FACTOR * x)
    value, err = ctx.table.weighted_moment(x, cut, poly)
    if cut < mu:
        tail = sum(abs(c) * truncation_tail_bound(x, cut, i) for i, c in enumerate(poly) if c)
        if tail > TAIL_REL_LIMIT * abs(value):
            raise AccuracyError(f"tail beyond {cut:.6g} not negligible at x={x:.6g}")
    return value, err


def _check_x(x):
    x = float(x)
    if not math.isfinite(x) or not x >= 2:
        raise DomainError("weighted moments need finite x >= 2")
    return x


def weighted_fourth_moment(x: float, ctx: WeightedMomentContext) -> float:
    """W(x) = int_0^{mu(x)} Z^4 e^{-t/x} dt."""
    x = _check_x(x)
    return _bulk(x, ctx, (1.0, 0.0, 0.0))[0]


def laplace_fourth_moment(delta: float, ctx: WeightedMomentContext) -> float:
    """Weighted moment at x = 1/delta, for 0 < delta <= 1/2."""
    delta = float(delta)
    if not 0 < delta <= 0.5:
        raise DomainError("delta must lie in (0, 1/2]")
    return weighted_fourth_moment(1.0 / delta, ctx)


def _boundary_factor(x, ctx):
    """(mu, mu', mu'', e^{-mu/x}) and whether boundary terms can matter."""
    mu = ctx.mu.mu(x)
    d1, d2 = ctx.mu.mu_derivatives(x)
    damp = math.exp(-mu / x)
    return mu, d1, d2, damp


def phi2_prime(y: float, ctx: WeightedMomentContext) -> float:
    """W'(y). The boundary term is skipped only when it is below rounding of the bulk."""
    y = _check_x(y)
    bulk, _ = _bulk(y, ctx, (0.0, 1.0, 0.0))
    bulk /= y * y
    mu, d1, _, damp = _boundary_factor(y, ctx)
    if damp * d1 * Z4_SLOPE * mu <= NEGLIGIBLE * abs(bulk):
        return bulk
    return bulk + ctx.evaluator.z4(mu) * damp * d1


def phi2_second_parts(y: float, ctx: WeightedMomentContext):
    """(J(y), Q(y)) with W''(y) = J + Q."""
    y = _check_x(y)
    bulk, _ = _bulk(y, ctx, j_poly(y))
    J = bulk / y**3
    mu, d1, d2, damp = _boundary_factor(y, ctx)
    if damp * Z4_SLOPE * mu * (d1 * d1 + d2 + d1 * mu / y**2) <= NEGLIGIBLE * abs(J):
        return J, 0.0
    ev = ctx.evaluator
    z = ev.hardy_z(mu)
    h = DERIV_STEP
    dz = (ev.hardy_z(mu + h) - ev.hardy_z(mu - h)) / (2 * h)
    z4 = z**4
    dz4 = 4.0 * z**3 * dz
    # d/dy [Z^4(mu) e^{-mu/y} mu'] plus the limit term of the first integral
    Q = damp * (
        dz4 * d1 * d1
        + z4 * d1 * (mu / y**2 - d1 / y)
        + z4 * d2
        + z4 * mu * d1 / y**2
    )
    return J, Q


def phi2_second(y: float, ctx: WeightedMomentContext) -> float:
    J, Q = phi2_second_parts(y, ctx)
    return J + Q
