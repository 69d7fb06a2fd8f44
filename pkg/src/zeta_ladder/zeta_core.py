"""Hardy's function Z(t) on the critical line.

Z(t) = exp(i theta(t)) zeta(1/2 + i t) with the Riemann-Siegel phase
theta(t) = Im log Gamma(1/4 + i t/2) - (t/2) log pi.
"""

from __future__ import annotations

import hashlib
import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import loggamma

from . import _kernels
from ._rs_coeffs import COEFFS, C_MAX
from .errors import AccuracyError, BracketError, DomainError

TWO_PI = 2.0 * math.pi
LOG_PI = math.log(math.pi)
EPS = np.finfo(float).eps

# bump when the numerics change so cached moment tables are invalidated
ALGORITHM_VERSION = 2
# largest imaginary part tolerated after rotating zeta by exp(i theta)
IMAG_RESIDUE_LIMIT = 1e-7

_table_lock = threading.Lock()
_logn = np.zeros(2)
_rsqrt = np.zeros(2)


def _dirichlet_tables(nmax):
    """log n and n^(-1/2) for 1 <= n <= nmax (index 0 unused)."""
    global _logn, _rsqrt
    logn, rsqrt = _logn, _rsqrt
    if logn.shape[0] > nmax:
        return logn, rsqrt
    with _table_lock:
        if _logn.shape[0] <= nmax:
            size = max(2 * nmax, 1024)
            n = np.arange(size, dtype=float)
            n[0] = 1.0
            _logn = np.log(n)
            _rsqrt = 1.0 / np.sqrt(n)
        return _logn, _rsqrt


def _as_heights(t):
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("height t must be finite")
    if np.any(arr < 0):
        raise DomainError("height t must be >= 0")
    return arr


@dataclass(frozen=True)
class ZEvaluator:
    """Configured evaluator of theta(t) and Z(t).

    ``rs_terms`` counts the Riemann-Siegel correction orders used after the
    leading C_0 term, so ``rs_terms=3`` means C_0..C_3.
    """

    rs_terms: int = 3
    crossover_t: float = 2500.0
    target_abs_err: float = 1e-8

    def __post_init__(self):
        if not (0 <= int(self.rs_terms) <= 3) or int(self.rs_terms) != self.rs_terms:
            raise DomainError("rs_terms must be an integer in 0..3")
        if not (self.crossover_t >= 10.0) or not math.isfinite(self.crossover_t):
            raise DomainError("crossover_t must be >= 10")
        if not (self.target_abs_err > 0):
            raise DomainError("target_abs_err must be positive")

    @property
    def fingerprint(self) -> str:
        key = (
            f"Z{ALGORITHM_VERSION};rs_terms={self.rs_terms};"
            f"crossover={self.crossover_t!r};target={self.target_abs_err!r}"
        )
        return hashlib.sha256(key.encode()).hexdigest()[:16]

    # ------------------------------------------------------------------ theta
    def theta(self, t):
        arr = _as_heights(t)
        out = np.empty_like(arr, dtype=float)
        low = arr < self.crossover_t
        if np.any(low):
            tl = arr[low]
            out[low] = loggamma(0.25 + 0.5j * tl).imag - 0.5 * tl * LOG_PI
        if not np.all(low):
            out[~low] = _theta_asymptotic(arr[~low])
        return out if out.ndim else float(out)

    # -------------------------------------------------------------- hardy z
    def rs_error_estimate(self, t):
        """Truncation plus phase-rounding estimate of the Riemann-Siegel route at t."""
        a = math.sqrt(t / TWO_PI)
        trunc = C_MAX[self.rs_terms + 1] * a ** (-(self.rs_terms + 1.5))
        rounding = EPS * t * math.log(max(t, 3.0)) * math.sqrt(math.log(max(a, 1.0)) + 1.0)
        return trunc + rounding

    def hardy_z(self, t, route=None):
        """Z(t). ``route`` forces ``"rs"`` or ``"direct"``; default picks by crossover_t."""
        arr = _as_heights(t)
        flat = np.atleast_1d(arr).ravel()
        out = np.empty(flat.shape[0])
        if route is None:
            low = flat < self.crossover_t
        elif route == "direct":
            low = np.ones(flat.shape[0], dtype=bool)
        elif route == "rs":
            low = np.zeros(flat.shape[0], dtype=bool)
        else:
            raise DomainError(f"unknown route {route!r}")
        if np.any(low):
            out[low] = self._z_direct(flat[low])
        if not np.all(low):
            out[~low] = self._z_rs(flat[~low])
        if arr.ndim == 0:
            return float(out[0])
        return out.reshape(arr.shape)

    def z4(self, t):
        z = self.hardy_z(t)
        z2 = z * z
        return z2 * z2

    def zeta_half(self, t):
        """zeta(1/2 + it) by the alternating series (complex)."""
        arr = np.atleast_1d(_as_heights(t)).astype(float)
        th = np.atleast_1d(self.theta(arr))
        re = np.empty(arr.shape[0])
        im = np.empty(arr.shape[0])
        _kernels.borwein_rotated(arr, th, re, im)
        val = (re + 1j * im) * np.exp(-1j * th)
        return val if np.ndim(t) else complex(val[0])

    def _z_direct(self, ts):
        if ts.shape[0] == 0:
            return ts.copy()
        th = np.atleast_1d(self.theta(ts))
        re = np.empty(ts.shape[0])
        im = np.empty(ts.shape[0])
        _kernels.borwein_rotated(ts, th, re, im)
        worst = np.max(np.abs(im))
        if worst > IMAG_RESIDUE_LIMIT:
            raise AccuracyError(f"rotation left imaginary residue {worst:.3g}")
        return re

    def _z_rs(self, ts):
        if ts.shape[0] == 0:
            return ts.copy()
        tmin = float(ts.min())
        if tmin < TWO_PI:
            raise AccuracyError("Riemann-Siegel route needs t >= 2 pi")
        est = self.rs_error_estimate(tmin)
        if est > self.target_abs_err:
            raise AccuracyError(
                f"Riemann-Siegel with rs_terms={self.rs_terms} reaches only ~{est:.2g} "
                f"at t={tmin:.6g} (target {self.target_abs_err:.2g})"
            )
        order = np.argsort(ts, kind="stable")
        st = np.ascontiguousarray(ts[order])
        cells = np.floor(st).astype(np.int64)
        th = _theta_asymptotic(st)
        nmax = int(math.sqrt(st[-1] / TWO_PI)) + 2
        logn, rsqrt = _dirichlet_tables(nmax)
        res = np.empty(st.shape[0])
        _kernels.rs_cluster(st, th, cells, COEFFS, self.rs_terms, logn, rsqrt, res)
        out = np.empty_like(res)
        out[order] = res
        return out

    def z_rs_plain(self, t):
        """Riemann-Siegel with one cosine per term (no cell expansion); reference route."""
        ts = np.atleast_1d(_as_heights(t)).astype(float)
        th = _theta_asymptotic(ts)
        logn, rsqrt = _dirichlet_tables(int(math.sqrt(ts.max() / TWO_PI)) + 2)
        out = np.empty(ts.shape[0])
        _kernels.rs_plain(ts, th, COEFFS, self.rs_terms, logn, rsqrt, out)
        return out if np.ndim(t) else float(out[0])

    # ---------------------------------------------------------------- zeros
    def find_zero(self, a: float, b: float) -> float:
        """Zero of Z in (a, b) by Brent's method on a sign-change bracket."""
        a, b = float(a), float(b)
        if not a < b:
            raise DomainError("find_zero needs a < b")
        za, zb = self.hardy_z(a), self.hardy_z(b)
        if za == 0.0:
            return a
        if zb == 0.0:
            return b
        if za * zb > 0:
            raise BracketError(f"Z has no sign change on [{a}, {b}]")
        root = brentq(self.hardy_z, a, b, xtol=1e-14, rtol=4 * EPS, maxiter=200)
        if abs(self.hardy_z(root)) > self.target_abs_err:
            raise AccuracyError(f"|Z| at located zero {root} exceeds target")
        return root


def _theta_asymptotic(t):
    t = np.asarray(t, dtype=float)
    inv = 1.0 / t
    inv2 = inv * inv
    tail = inv * (1.0 / 48 + inv2 * (7.0 / 5760 + inv2 * (31.0 / 80640 + inv2 * (127.0 / 430080))))
    return 0.5 * t * np.log(t / TWO_PI) - 0.5 * t - math.pi / 8 + tail


DEFAULT_EVALUATOR = ZEvaluator()


def theta(t, evaluator: ZEvaluator = DEFAULT_EVALUATOR):
    return evaluator.theta(t)


def hardy_z(t, evaluator: ZEvaluator = DEFAULT_EVALUATOR):
    return evaluator.hardy_z(t)


def z4(t, evaluator: ZEvaluator = DEFAULT_EVALUATOR):
    return evaluator.z4(t)


def find_zero(a, b, evaluator: ZEvaluator = DEFAULT_EVALUATOR):
    return evaluator.find_zero(a, b)
