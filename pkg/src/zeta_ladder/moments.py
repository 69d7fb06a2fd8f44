"""Cumulative fourth moment I(T) = int_0^T Z(t)^4 dt with a persistent cache.

The range [0, T] is cut into cells of width ``dT``. For every cell the table
keeps the checkpoint I(k dT) and, in a binary sidecar, the local moments

    m_j = int_cell (t - c)^j Z(t)^4 dt,   j = 0 .. N_MOMENTS - 1,

about the cell centre c. A smooth weight w(t) = p(t) exp(-t/x) is then
integrated over whole cells by expanding it in powers of (t - c), which turns
every weighted moment over [0, L] into one reduction over cells plus one
partial cell. Partial cells reuse the cell's accepted Gauss-Legendre panels:
the 2*gl_order node values define the panel's interpolating polynomial, which
is integrated exactly up to the cut.
"""

from __future__ import annotations

import hashlib
import math
import os
import threading
from functools import lru_cache
from pathlib import Path

import numpy as np
from numpy.polynomial import legendre as npleg

from .errors import (
    CacheFingerprintError,
    CacheFormatError,
    CacheMonotonicityError,
    CacheVersionError,
    DomainError,
)
from .quadrature import (
    PanelPolicy,
    gauss_legendre,
    initial_edges,
    integrate_panels,
    tree_sum,
    z4_floor,
)
from .zeta_core import DEFAULT_EVALUATOR, ZEvaluator

FORMAT_VERSION = 1
MAGIC = "zeta-ladder-moments"
N_MOMENTS = 16
# every admissible weight scale x >= 2 asks for panels no wider than x/8
PANEL_CAP = 0.25
CHUNK_CELLS = 2048
SAVE_EVERY = 65536
FLOOR_FRACTION = 0.1


def ingham_main(T: float) -> float:
    """Leading term T log^4 T / (2 pi^2) of the fourth moment."""
    T = float(T)
    if not T > 1:
        raise DomainError("ingham_main needs T > 1")
    return T * math.log(T) ** 4 / (2.0 * math.pi**2)


class _CellPanels:
    """Accepted panels of one cell with their interpolating Legendre series."""

    def __init__(self, lo, hi, values, coeffs, nodes_ref):
        self.lo = lo
        self.hi = hi
        self.values = values
        self.coeffs = coeffs  # (n_fine, panels)
        self.nodes_ref = nodes_ref
        self.prefix = np.concatenate(([0.0], np.cumsum(values)))

    def partial(self, t):
        """int_{cell start}^{t} Z^4 for t inside the cell (array)."""
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self.hi, t, side="right"), 0, self.lo.size - 1)
        out = np.empty(t.shape)
        for p in np.unique(idx):
            sel = idx == p
            half = 0.5 * (self.hi[p] - self.lo[p])
            u = np.clip((t[sel] - self.lo[p]) / half - 1.0, -1.0, 1.0)
            anti = npleg.legint(self.coeffs[:, p], lbnd=-1)
            out[sel] = self.prefix[p] + half * npleg.legval(u, anti)
        return out

    def weighted_partial(self, upper, weight_fn):
        """int_{cell start}^{upper} weight(t) Z^4 dt, upper inside the cell."""
        x_ref, w_ref = self.nodes_ref
        total = []
        for p in range(self.lo.size):
            lo, hi = self.lo[p], self.hi[p]
            if lo >= upper:
                break
            top = min(hi, upper)
            half_p = 0.5 * (hi - lo)
            half = 0.5 * (top - lo)
            t = lo + half + half * x_ref
            u = (t - lo) / half_p - 1.0
            f = npleg.legval(u, self.coeffs[:, p])
            total.append(half * float(np.dot(w_ref, f * weight_fn(t))))
        return math.fsum(total)


class MomentTable:
    """Checkpointed I(T) on a uniform grid starting at (0, 0), extendable on demand.

    ``checkpoints`` is the pair of arrays (T, I). ``path`` makes the table
    persistent: every extension rewrites the checkpoint file and its sidecar.
    """

    def __init__(
        self,
        evaluator: ZEvaluator = DEFAULT_EVALUATOR,
        policy: PanelPolicy = PanelPolicy(),
        dT: float = 1.0,
        path=None,
        threads: int = 1,
    ):
        dT = float(dT)
        if not 0 < dT <= 2.0:
            raise DomainError("checkpoint spacing dT must lie in (0, 2]")
        self.evaluator = evaluator
        self.policy = policy
        self.dT = dT
        self.path = Path(path) if path is not None else None
        self.threads = max(1, int(threads))
        self._lock = threading.Lock()
        self._I = np.zeros(1)
        self._mom = np.zeros((0, N_MOMENTS))
        self._err = np.zeros(0)
        self._floor = z4_floor(policy.rel_tol, FLOOR_FRACTION)
        self._panel_cache = lru_cache(maxsize=8192)(self._compute_cell_panels)

    # ---------------------------------------------------------------- meta
    @property
    def fingerprint(self) -> str:
        key = ";".join(
            [
                self.evaluator.fingerprint,
                self.policy.fingerprint,
                f"dT={self.dT!r}",
                f"v={FORMAT_VERSION}",
                f"moments={N_MOMENTS}",
                f"cap={PANEL_CAP!r}",
                f"floor={FLOOR_FRACTION!r}",
            ]
        )
        return hashlib.sha256(key.encode()).hexdigest()[:16]

    @property
    def meta(self) -> dict:
        return {
            "dT": self.dT,
            "rel_tol": self.policy.rel_tol,
            "fingerprint": self.fingerprint,
            "format_version": FORMAT_VERSION,
        }

    @property
    def checkpoints(self):
        I = self._I
        return np.arange(I.size) * self.dT, I.copy()

    @property
    def rows(self) -> int:
        return int(self._I.size)

    @property
    def t_max(self) -> float:
        return (self._I.size - 1) * self.dT

    def __eq__(self, other):
        if not isinstance(other, MomentTable):
            return NotImplemented
        return (
            self.meta == other.meta
            and self._I.size == other._I.size
            and bool(np.all(self._I == other._I))
        )

    __hash__ = None

    # ----------------------------------------------------------- extension
    def _cell_edges(self, k0, k1):
        a, b = k0 * self.dT, k1 * self.dT
        return initial_edges(a, b, self.policy, cap=PANEL_CAP, grid=self.dT)

    def _fine_rule(self):
        return gauss_legendre(2 * self.policy.gl_order)

    def _compute_cells(self, k0, k1):
        """Local moments and error estimates for cells k0 .. k1-1."""
        edges = self._cell_edges(k0, k1)
        lo, hi, q, err, xs, fs, _ = integrate_panels(
            self.evaluator.z4, edges[:-1], edges[1:], self.policy, self.threads, self._floor
        )
        _, w_ref = self._fine_rule()
        weights = 0.5 * (hi - lo)[:, None] * w_ref[None, :]
        cell_of_panel = np.floor((lo + 1e-9 * self.dT) / self.dT).astype(np.int64)
        centres = (cell_of_panel + 0.5) * self.dT
        s = xs - centres[:, None]
        wf = weights * fs
        per_panel = np.empty((lo.size, N_MOMENTS))
        powj = np.ones_like(s)
        for j in range(N_MOMENTS):
            per_panel[:, j] = (wf * powj).sum(axis=1)
            powj = powj * s
        per_panel[:, 0] = q
        starts = np.flatnonzero(np.r_[True, cell_of_panel[1:] != cell_of_panel[:-1]])
        if starts.size != k1 - k0:
            raise CacheFormatError("panel-to-cell assignment failed")
        mom = np.add.reduceat(per_panel, starts, axis=0)
        e = np.add.reduceat(err, starts)
        return mom, e

    def extend_to(self, T: float, exact: bool = False):
        """Make checkpoints cover [0, T]; non-exact requests round up to a chunk."""
        need = int(math.ceil(float(T) / self.dT - 1e-12))
        self._ensure_cells(need, exact)

    def _ensure_cells(self, ncells, exact=False):
        if self._I.size - 1 >= ncells and self._mom.shape[0] >= ncells:
            return
        with self._lock:
            have_I = self._I.size - 1
            have_m = self._mom.shape[0]
            if have_I >= ncells and have_m >= ncells:
                return
            target = ncells if exact else int(math.ceil(ncells / CHUNK_CELLS) * CHUNK_CELLS)
            target = max(target, ncells)
            start = min(have_I, have_m)
            last_save = start
            k = start
            while k < target:
                k1 = min(k + CHUNK_CELLS, target)
                mom, e = self._compute_cells(k, k1)
                if k1 > self._mom.shape[0]:
                    off = self._mom.shape[0] - k
                    self._mom = np.concatenate((self._mom, mom[max(off, 0):]))
                    self._err = np.concatenate((self._err, e[max(off, 0):]))
                if k1 > self._I.size - 1:
                    off = self._I.size - 1 - k
                    I = list(self._I[-1:])
                    acc = float(self._I[-1])
                    for v in mom[max(off, 0):, 0]:
                        acc = acc + float(v)
                        I.append(acc)
                    self._I = np.concatenate((self._I, np.array(I[1:])))
                k = k1
                if self.path is not None and k - last_save >= SAVE_EVERY:
                    self.save()
                    last_save = k
            if self.path is not None and k > last_save:
                self.save()

    # ------------------------------------------------------------ queries
    def _compute_cell_panels(self, k):
        edges = self._cell_edges(k, k + 1)
        lo, hi, q, _, _, fs, _ = integrate_panels(
            self.evaluator.z4, edges[:-1], edges[1:], self.policy, 1, self._floor
        )
        x_ref, w_ref = self._fine_rule()
        n = x_ref.size
        V = npleg.legvander(x_ref, n - 1)
        scale = (2 * np.arange(n) + 1) / 2.0
        coeffs = scale[:, None] * (V.T @ (w_ref[:, None] * fs.T))
        return _CellPanels(lo, hi, q, coeffs, (x_ref, w_ref))

    def cell_panels(self, k: int) -> _CellPanels:
        return self._panel_cache(int(k))

    def fourth_moment(self, T):
        """I(T): checkpoint at or below T plus the partial cell. Scalar or array."""
        arr = np.asarray(T, dtype=float)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise DomainError("fourth_moment needs finite T >= 0")
        flat = np.atleast_1d(arr).ravel()
        if flat.size == 0:
            return flat.copy()
        k = np.floor(flat / self.dT).astype(np.int64)
        self._ensure_cells(int(k.max()) + 1)
        I = self._I
        out = I[k].copy()
        starts = k * self.dT
        inside = flat > starts
        if np.any(inside):
            for cell in np.unique(k[inside]):
                sel = inside & (k == cell)
                out[sel] = out[sel] + self.cell_panels(cell).partial(flat[sel])
        if arr.ndim == 0:
            return float(out[0])
        return out.reshape(arr.shape)

    def weighted_moment(self, x: float, upper: float, poly=(1.0, 0.0, 0.0)):
        """int_0^upper (p0 + p1 t + p2 t^2) exp(-t/x) Z(t)^4 dt.

        Returns ``(value, error_estimate)``.
        """
        x = float(x)
        upper = float(upper)
        if not x > 0 or not upper >= 0:
            raise DomainError("weighted_moment needs x > 0 and upper >= 0")
        p0, p1, p2 = (float(c) for c in poly)
        kfull = int(math.floor(upper / self.dT))
        self._ensure_cells(kfull + 1)
        mom = self._mom[:kfull]
        c = (np.arange(kfull) + 0.5) * self.dT
        # Taylor coefficients of p about each centre
        pi0 = p0 + c * (p1 + c * p2)
        pi1 = p1 + 2.0 * p2 * c
        j = np.arange(N_MOMENTS)
        expo = (-1.0 / x) ** j / np.array([math.factorial(int(v)) for v in j], dtype=float)
        g0 = mom @ expo
        acc = pi0 * g0
        if p1 != 0.0 or p2 != 0.0:
            acc = acc + pi1 * (mom[:, 1:] @ expo[:-1])
        if p2 != 0.0:
            acc = acc + p2 * (mom[:, 2:] @ expo[:-2])
        damp = np.exp(-c / x)
        cells = damp * acc
        err = damp * (np.abs(pi0) + 0.5 * self.dT * np.abs(pi1) + 0.25 * self.dT**2 * abs(p2)) * self._err[:kfull]
        value = tree_sum(cells)
        start = kfull * self.dT
        if upper > start:
            def weight(t):
                return (p0 + t * (p1 + t * p2)) * np.exp(-t / x)

            value = value + self.cell_panels(kfull).weighted_partial(upper, weight)
        return value, tree_sum(err)

    # -------------------------------------------------------- persistence
    def save(self, path=None):
        save_table(self, path if path is not None else self.path)

    def clear_memory(self):
        with self._lock:
            self._I = np.zeros(1)
            self._mom = np.zeros((0, N_MOMENTS))
            self._err = np.zeros(0)
            self._panel_cache.cache_clear()


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".cells.npz")


def save_table(table: MomentTable, path) -> None:
    """Write the checkpoint file (text) and the local-moment sidecar (binary)."""
    if path is None:
        raise DomainError("no path to save the moment table to")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    T, I = table.checkpoints
    lines = [f"{MAGIC} v{FORMAT_VERSION} dT={table.dT!r} fingerprint={table.fingerprint}", "T,I4"]
    lines.extend(f"{t:.17g},{v:.17g}" for t, v in zip(T, I))
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    os.replace(tmp, path)
    side = _sidecar(path)
    tmp_side = side.with_name(side.name + ".tmp.npz")
    np.savez(
        tmp_side,
        moments=table._mom,
        errors=table._err,
        fingerprint=np.array(table.fingerprint),
    )
    os.replace(tmp_side, side)


def read_header(path) -> dict:
    path = Path(path)
    with path.open() as fh:
        first = fh.readline().strip()
    parts = first.split()
    if len(parts) != 4 or parts[0] != MAGIC:
        raise CacheFormatError(f"{path}: not a moment table")
    if not parts[1].startswith("v"):
        raise CacheFormatError(f"{path}: malformed version field")
    try:
        version = int(parts[1][1:])
        dT = float(parts[2].split("=", 1)[1])
        fingerprint = parts[3].split("=", 1)[1]
    except (ValueError, IndexError) as exc:
        raise CacheFormatError(f"{path}: malformed header") from exc
    return {"version": version, "dT": dT, "fingerprint": fingerprint}


def load_table(
    path,
    evaluator: ZEvaluator = DEFAULT_EVALUATOR,
    policy: PanelPolicy = PanelPolicy(),
    threads: int = 1,
    attach: bool = True,
) -> MomentTable:
    """Read and validate a checkpoint file written by ``save_table``.

    The stored fingerprint must match the one implied by ``evaluator`` and
    ``policy``. With ``attach`` the returned table keeps writing to ``path``.
    """
    path = Path(path)
    head = read_header(path)
    if head["version"] != FORMAT_VERSION:
        raise CacheVersionError(f"{path}: format version {head['version']} (expected {FORMAT_VERSION})")
    table = MomentTable(evaluator, policy, dT=head["dT"], path=path if attach else None, threads=threads)
    if head["fingerprint"] != table.fingerprint:
        raise CacheFingerprintError(
            f"{path}: fingerprint {head['fingerprint']} does not match configuration {table.fingerprint}"
        )
    with path.open() as fh:
        fh.readline()
        if fh.readline().strip() != "T,I4":
            raise CacheFormatError(f"{path}: missing T,I4 column header")
        try:
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise CacheFormatError(f"{path}: unreadable rows") from exc
    if data.shape[0] == 0 or data.shape[1] != 2:
        raise CacheFormatError(f"{path}: no checkpoint rows")
    T, I = data[:, 0], data[:, 1]
    expected_T = np.arange(T.size) * table.dT
    if T[0] != 0.0 or I[0] != 0.0:
        raise CacheFormatError(f"{path}: first checkpoint must be (0, 0)")
    if np.any(np.diff(T) <= 0) or not np.allclose(T, expected_T, rtol=1e-12, atol=1e-9):
        raise CacheFormatError(f"{path}: checkpoints not on a uniform grid")
    if np.any(np.diff(I) < 0):
        raise CacheMonotonicityError(f"{path}: I4 column decreases")
    table._I = I.copy()
    side = _sidecar(path)
    if side.exists():
        with np.load(side) as z:
            if str(z["fingerprint"]) == table.fingerprint:
                n = min(z["moments"].shape[0], I.size - 1)
                table._mom = np.array(z["moments"][:n])
                table._err = np.array(z["errors"][:n])
    return table


def fourth_moment(T, table: MomentTable):
    return table.fourth_moment(T)
