"""Panel Gauss-Legendre quadrature for integrands that oscillate like Z(t)^4.

Panels are laid on the integer grid and subdivided so that a panel near
height t is no wider than ``2 pi / log(max(t, 20)/2 pi) / panels_per_oscillation``
(the local spacing of zeros of Z divided by the panel density). Each panel is
integrated with ``gl_order`` and ``2 * gl_order`` nodes; panels whose two
values disagree by more than ``rel_tol`` times the panel's absolute mass are
bisected and retried. Panel values are combined by a fixed balanced tree over
panel position, so the result does not depend on how evaluation was split
across threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, DomainError

TWO_PI = 2.0 * math.pi
EVAL_CHUNK = 1 << 15


@dataclass(frozen=True)
class PanelPolicy:
    gl_order: int = 16
    panels_per_oscillation: float = 4.0
    rel_tol: float = 1e-8
    max_panels: int = 4_000_000

    def __post_init__(self):
        if int(self.gl_order) != self.gl_order or self.gl_order < 4:
            raise DomainError("gl_order must be an integer >= 4")
        if not self.panels_per_oscillation >= 1:
            raise DomainError("panels_per_oscillation must be >= 1")
        if not 0 < self.rel_tol < 1:
            raise DomainError("rel_tol must lie in (0, 1)")
        if self.max_panels < 1:
            raise DomainError("max_panels must be positive")

    @property
    def fingerprint(self) -> str:
        return f"P;gl={self.gl_order};ppo={self.panels_per_oscillation!r};tol={self.rel_tol!r}"


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    panels_used: int
    evaluations: int


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    """Nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def oscillation_width(t):
    """Approximate spacing of consecutive zeros of Z near height t."""
    return TWO_PI / np.log(np.maximum(t, 20.0) / TWO_PI)


def tree_sum(values) -> float:
    """Sum by a fixed balanced binary tree over the array index."""
    a = np.asarray(values, dtype=float).ravel()
    if a.size == 0:
        return 0.0
    while a.size > 1:
        if a.size % 2:
            a = np.append(a, 0.0)
        a = a[0::2] + a[1::2]
    return float(a[0])


def initial_edges(a, b, policy: PanelPolicy, cap=None, breakpoints=(), grid=1.0):
    """Panel edges for [a, b] before any adaptive refinement.

    The interval is cut at multiples of ``grid`` and at ``breakpoints``; each
    piece is split into equal panels no wider than the policy width evaluated
    at the piece's right end (the width decreases with height for t >= 20).
    """
    cuts = np.arange(math.floor(a / grid) + 1, math.ceil(b / grid)) * grid
    extra = [p for p in breakpoints if a < p < b]
    pts = np.unique(np.concatenate(([a], cuts, extra, [b])))
    if pts.size == 1:
        return np.array([a, b], dtype=float)
    left, right = pts[:-1], pts[1:]
    width = oscillation_width(right) / policy.panels_per_oscillation
    if cap is not None:
        width = np.minimum(width, cap)
    counts = np.maximum(np.ceil((right - left) / width).astype(np.int64), 1)
    edges = [np.array([a])]
    for lo, hi, n in zip(left, right, counts):
        e = lo + (hi - lo) * np.arange(1, n + 1) / n
        e[-1] = hi
        edges.append(e)
    return np.concatenate(edges)


def _vectorize(f):
    def call(x):
        try:
            y = f(x)
        except TypeError:
            y = None
        if y is None or np.ndim(y) == 0:
            y = np.array([f(float(v)) for v in x], dtype=float)
        return np.asarray(y, dtype=float)

    return call


def evaluate_nodes(f, nodes, threads=1):
    """f at every node; chunks are farmed to threads and reassembled in order."""
    fv = _vectorize(f)
    if threads <= 1 or nodes.size <= EVAL_CHUNK:
        return fv(nodes)
    chunks = [nodes[i : i + EVAL_CHUNK] for i in range(0, nodes.size, EVAL_CHUNK)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(fv, chunks))
    return np.concatenate(parts)


def panel_rules(lo, hi, n):
    """Nodes (panels x n) and weights for n-point Gauss-Legendre on each panel."""
    x, w = gauss_legendre(n)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    return mid[:, None] + half[:, None] * x[None, :], half[:, None] * w[None, :]


def z4_floor(rel_tol, fraction=0.1):
    """Absolute panel tolerance for Z^4-like integrands.

    A small multiple of the mean density log^4(t) / (2 pi^2), so that panels
    sitting on a near-double zero, where Z^4 is tiny and its relative
    rounding noise large, stop refining once they no longer matter.
    """
    scale = fraction * rel_tol / (2.0 * math.pi**2)

    def floor(lo, hi):
        mid = np.maximum(0.5 * (lo + hi), math.e)
        return scale * np.log(mid) ** 4 * (hi - lo)

    return floor


def integrate_panels(f, lo, hi, policy: PanelPolicy, threads=1, floor=None):
    """Adaptive panel integration on given starting panels.

    A panel is accepted when its two estimates differ by at most
    ``rel_tol`` times its absolute mass plus ``floor(lo, hi)`` if given.
    Returns accepted panels sorted by position as a tuple
    ``(lo, hi, values, errors, fine_nodes, fine_values, evaluations)``; the
    fine (2 * gl_order) node values are kept for callers that need them.
    """
    n1 = policy.gl_order
    n2 = 2 * n1
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    done = []
    evaluations = 0
    total_panels = lo.size
    while lo.size:
        x1, w1 = panel_rules(lo, hi, n1)
        x2, w2 = panel_rules(lo, hi, n2)
        vals = evaluate_nodes(f, np.concatenate((x1.ravel(), x2.ravel())), threads)
        evaluations += vals.size
        f1 = vals[: x1.size].reshape(x1.shape)
        f2 = vals[x1.size :].reshape(x2.shape)
        if not np.all(np.isfinite(vals)):
            raise DomainError("integrand is not finite on the integration range")
        q1 = (w1 * f1).sum(axis=1)
        q2 = (w2 * f2).sum(axis=1)
        err = np.abs(q2 - q1)
        mass = (w2 * np.abs(f2)).sum(axis=1)
        allowed = policy.rel_tol * mass
        if floor is not None:
            allowed = allowed + floor(lo, hi)
        ok = err <= allowed
        done.append((lo[ok], hi[ok], q2[ok], err[ok], x2[ok], f2[ok]))
        bad = ~ok
        if not np.any(bad):
            break
        total_panels += int(bad.sum())
        if total_panels > policy.max_panels:
            done.append((lo[bad], hi[bad], q2[bad], err[bad], x2[bad], f2[bad]))
            parts = [np.concatenate(c) for c in zip(*done)]
            order = np.argsort(parts[0], kind="stable")
            raise ConvergenceError(
                f"max_panels={policy.max_panels} exhausted",
                value=tree_sum(parts[2][order]),
                error_estimate=tree_sum(parts[3][order]),
            )
        mid = 0.5 * (lo[bad] + hi[bad])
        lo = np.concatenate((lo[bad], mid))
        hi = np.concatenate((mid, hi[bad]))
    parts = [np.concatenate(c) for c in zip(*done)]
    order = np.argsort(parts[0], kind="stable")
    lo_s, hi_s, q, e, xs, fs = (p[order] for p in parts)
    return lo_s, hi_s, q, e, xs, fs, evaluations


def _check_interval(a, b):
    a = float(a)
    b = float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError("integration limits must be finite; truncate infinite ranges first")
    if a > b:
        raise DomainError("integration needs a <= b")
    return a, b


def integrate(f, a, b, policy: PanelPolicy = PanelPolicy(), *, cap=None, breakpoints=(), threads=1, floor=None):
    """Integral of f over [a, b]. ``f`` may be vectorized over numpy arrays."""
    a, b = _check_interval(a, b)
    edges = initial_edges(a, b, policy, cap=cap, breakpoints=breakpoints)
    lo, hi, q, err, _, _, evals = integrate_panels(f, edges[:-1], edges[1:], policy, threads, floor)
    return QuadratureResult(
        value=tree_sum(q),
        error_estimate=tree_sum(err),
        panels_used=int(lo.size),
        evaluations=int(evals),
    )


def integrate_weighted(f, x, a, b, policy: PanelPolicy = PanelPolicy(), *, breakpoints=(), threads=1, floor=None):
    """Integral of f(t) exp(-t/x) over [a, b]; panels are also capped at width x/8."""
    x = float(x)
    if not x > 0:
        raise DomainError("weight scale x must be positive")
    fv = _vectorize(f)

    def weighted(t):
        return fv(t) * np.exp(-t / x)

    return integrate(weighted, a, b, policy, cap=x / 8.0, breakpoints=breakpoints, threads=threads, floor=floor)
