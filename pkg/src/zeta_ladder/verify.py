"""Both sides of each checkable asymptotic statement, as structured reports.

Every row carries the quantities compared (lhs, rhs, ratio), diagnostics in
``aux`` and named pass/fail checks. Checks are either *hard* (identities,
residuals, the ladder bracket: a failure means something is wrong) or
*soft* (main-term bands and trends whose constants are engineering choices).
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .ladder import (
    DenseLadder,
    chord_slope,
    inverse_ladder,
    reverse_interval,
    solve_phi2,
)
from .moments import ingham_main
from .quadrature import integrate, z4_floor
from .weighted import WeightedMomentContext, laplace_fourth_moment, phi2_second_parts

C0 = 1.0 / (2.0 * math.pi**2)
THEOREM_FLOOR = 1000.0
IDENTITY_TOL = 1e-3
THEOREM_BAND = (0.3, 3.0)
THEOREM_BAND_FROM = 1e4  # the band is only asserted from this height on
MAIN_TERM_BAND = (0.5, 2.0)
CHORD_BAND = 5.0  # |tan - 1| <= CHORD_BAND / log T
NEAR_T_BAND = 10.0  # |(phi2 - T) log T / T| <= NEAR_T_BAND
PHI2PP_GROWTH = 10.0
TREND_SLACK = 0.1
DENSE_PAD = 1e-3

EXIT_PASS = 0
EXIT_SOFT = 1
EXIT_HARD = 5


@dataclass(frozen=True)
class Check:
    name: str
    hard: bool
    passed: bool
    detail: str = ""


@dataclass
class ReportRow:
    parameters: dict
    lhs: float
    rhs: float
    ratio: float
    aux: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    def record(self) -> dict:
        """Flat record: parameters, lhs, rhs, ratio, aux.*, check.*."""
        out = dict(self.parameters)
        out["lhs"] = self.lhs
        out["rhs"] = self.rhs
        out["ratio"] = self.ratio
        for k, v in self.aux.items():
            out[f"aux.{k}"] = v
        for c in self.checks:
            out[f"check.{c.name}"] = c.passed
        return out


@dataclass
class VerificationReport:
    name: str
    rows: list
    meta: dict
    checks: list = field(default_factory=list)

    def all_checks(self):
        for row in self.rows:
            yield from row.checks
        yield from self.checks

    @property
    def hard_pass(self) -> bool:
        return all(c.passed for c in self.all_checks() if c.hard)

    @property
    def soft_pass(self) -> bool:
        return all(c.passed for c in self.all_checks() if not c.hard)

    @property
    def exit_code(self) -> int:
        if not self.hard_pass:
            return EXIT_HARD
        return EXIT_PASS if self.soft_pass else EXIT_SOFT

    def summary(self) -> dict:
        failed = [
            {"check": c.name, "kind": "hard" if c.hard else "soft", "detail": c.detail}
            for c in self.all_checks()
            if not c.passed
        ]
        return {"hard_pass": self.hard_pass, "soft_pass": self.soft_pass, "failed": failed}

    def to_structured(self) -> str:
        meta = dict(self.meta)
        meta.update(self.summary())
        meta["report_checks"] = [
            {"check": c.name, "kind": "hard" if c.hard else "soft", "passed": c.passed, "detail": c.detail}
            for c in self.checks
        ]
        doc = {"name": self.name, "meta": meta, "rows": [r.record() for r in self.rows]}
        return dumps_17(doc) + "\n"

    def to_csv(self) -> str:
        records = [r.record() for r in self.rows]
        columns = []
        for rec in records:
            for k in rec:
                if k not in columns:
                    columns.append(k)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for rec in records:
            writer.writerow([format_value(rec[k]) if k in rec else "" for k in columns])
        return buf.getvalue()


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    return str(v)


def dumps_17(obj, indent=2, _level=0) -> str:
    """JSON with every float written at 17 significant digits (non-finite as null)."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps_17(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{dumps_17(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return f"{v:.17g}" if math.isfinite(v) else "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    return json.dumps(str(obj))


def _ratio(lhs, rhs):
    return lhs / rhs if rhs != 0 else float("nan")


def _meta(ctx: WeightedMomentContext, started: float, **tolerances) -> dict:
    return {
        "fingerprint": ctx.fingerprint,
        "evaluator": {
            "rs_terms": ctx.evaluator.rs_terms,
            "crossover_t": ctx.evaluator.crossover_t,
            "target_abs_err": ctx.evaluator.target_abs_err,
        },
        "policy": {
            "gl_order": ctx.policy.gl_order,
            "panels_per_oscillation": ctx.policy.panels_per_oscillation,
            "rel_tol": ctx.policy.rel_tol,
        },
        "mu": {"omega1": ctx.mu.omega1, "omega2": ctx.mu.omega2},
        "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime(started)),
        "finished": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
        "tolerances": tolerances,
    }


def _require_grid(values, what):
    values = [float(v) for v in values]
    if not values:
        raise DomainError(f"{what} grid is empty")
    return values


def _product_floor(rel_tol):
    single = z4_floor(1.0, 1.0)

    def floor(lo, hi):
        w = hi - lo
        return 0.1 * rel_tol * single(lo, hi) * single(lo, hi) / np.where(w > 0, w, 1.0)

    return floor


# ---------------------------------------------------------------- theorem


def theorem_rhs(T: float, U: float) -> float:
    """U log^8 T / (4 pi^4)."""
    return U * math.log(T) ** 8 / (4.0 * math.pi**4)


def theorem_window(T: float, epsilon: float):
    """(U, uncapped U): U = T^(13/14 + 2 epsilon) capped at T/2."""
    raw = T ** (13.0 / 14.0 + 2.0 * epsilon)
    return min(raw, 0.5 * T), raw


def verify_theorem(T: float, ctx: WeightedMomentContext, epsilon: float = 0.01) -> VerificationReport:
    """Eighth-order integral over the reverse interval, by two paths, against the main term."""
    started = time.time()
    T = float(T)
    if not T >= THEOREM_FLOOR:
        raise DomainError(f"theorem check needs T >= {THEOREM_FLOOR:g}")
    if not 0 < epsilon < 1 / 28:
        raise DomainError("epsilon must lie in (0, 1/28)")
    U, U_raw = theorem_window(T, epsilon)
    rev = reverse_interval(T, U, ctx)
    dense = DenseLadder(ctx, max(100.0, T * (1 - DENSE_PAD)), (T + U) * (1 + DENSE_PAD))
    z4 = ctx.evaluator.z4
    floor = _product_floor(ctx.policy.rel_tol)

    def direct(t):
        return z4(dense.phi2(t)) * z4(t)

    def transformed(w):
        return z4(w) * dense.phi2_prime(w)

    lhs_d = integrate(direct, rev.T_ring, rev.TU_ring, ctx.policy, threads=ctx.threads, floor=floor)
    lhs_t = integrate(transformed, T, T + U, ctx.policy, threads=ctx.threads, floor=floor)
    rhs = theorem_rhs(T, U)
    identity = _ratio(lhs_d.value, lhs_t.value)
    ratio = _ratio(lhs_d.value, rhs)
    checks = [Check("identity", True, abs(identity - 1) <= IDENTITY_TOL, f"direct/transformed = {identity:.12g}")]
    if T >= THEOREM_BAND_FROM:
        checks.append(
            Check(
                "main_term_band",
                False,
                THEOREM_BAND[0] <= ratio <= THEOREM_BAND[1],
                f"lhs/rhs = {ratio:.6g} vs band {THEOREM_BAND}",
            )
        )
    row = ReportRow(
        parameters={"T": T, "U": U, "epsilon": float(epsilon)},
        lhs=lhs_d.value,
        rhs=rhs,
        ratio=ratio,
        aux={
            "U_uncapped": U_raw,
            "U_capped": U < U_raw,
            "T_ring": rev.T_ring,
            "TU_ring": rev.TU_ring,
            "lhs_transformed": lhs_t.value,
            "identity_ratio": identity,
            "lhs_direct_error": lhs_d.error_estimate,
            "lhs_transformed_error": lhs_t.error_estimate,
            "lhs_direct_panels": lhs_d.panels_used,
            "lhs_transformed_panels": lhs_t.panels_used,
            "surrogate_tail_W": dense.w_tail,
            "surrogate_tail_dW": dense.bulk_tail,
        },
        checks=checks,
    )
    meta = _meta(ctx, started, identity=IDENTITY_TOL, band=list(THEOREM_BAND), band_from=THEOREM_BAND_FROM)
    return VerificationReport("theorem", [row], meta)


# ------------------------------------------------------------ phi2 near T


def verify_lemma_phi2_near_T(grid, ctx: WeightedMomentContext, tol: float = 1e-9) -> VerificationReport:
    """phi_2(T) - T against T / log T, plus the |phi_2(T) - T| <= T/4 bracket."""
    started = time.time()
    rows = []
    for T in sorted(_require_grid(grid, "T")):
        p = solve_phi2(T, ctx, tol)
        diff = p.phi2 - T
        scale = T / math.log(T)
        normalized = diff / scale
        ingham = ctx.table.fourth_moment(T) / ingham_main(T)
        rows.append(
            ReportRow(
                parameters={"T": T},
                lhs=diff,
                rhs=scale,
                ratio=normalized,
                aux={
                    "phi2": p.phi2,
                    "residual": p.residual,
                    "iterations": p.iterations,
                    "bracket_margin": T / 4 - abs(diff),
                    "inner_bracket": p.in_inner_bracket,
                    "ingham_ratio": ingham,
                },
                checks=[
                    Check("bracket", True, p.in_bracket, f"|phi2 - T| = {abs(diff):.6g}, T/4 = {T / 4:.6g}"),
                    Check("residual", True, p.residual <= tol, f"residual {p.residual:.3g}"),
                    Check("normalized_band", False, abs(normalized) <= NEAR_T_BAND, f"normalized {normalized:.6g}"),
                    Check(
                        "ingham_band",
                        False,
                        MAIN_TERM_BAND[0] <= ingham <= MAIN_TERM_BAND[1],
                        f"I(T)/main {ingham:.6g}",
                    ),
                ],
            )
        )
    meta = _meta(ctx, started, solver=tol, normalized_band=NEAR_T_BAND, ingham_band=list(MAIN_TERM_BAND))
    meta["normalized_max_abs"] = max(abs(r.ratio) for r in rows)
    return VerificationReport("phi2-near-t", rows, meta)


# ---------------------------------------------------------------- laplace


def laplace_main(delta: float) -> float:
    """(1/(2 pi^2)) (1/delta) log^4(1/delta)."""
    return C0 / delta * math.log(1.0 / delta) ** 4


def verify_laplace(deltas, ctx: WeightedMomentContext) -> VerificationReport:
    """Weighted moment at x = 1/delta against its main term, and the I(M_2(y)) form."""
    started = time.time()
    rows = []
    band_rows = []
    for d in sorted(_require_grid(deltas, "delta"), reverse=True):
        value = laplace_fourth_moment(d, ctx)
        main = laplace_main(d)
        r = _ratio(value, main)
        row = ReportRow(
            parameters={"form": "laplace", "delta": d, "T": float("nan")},
            lhs=value,
            rhs=main,
            ratio=r,
            aux={"x": 1.0 / d},
            checks=[Check("main_term_band", False, MAIN_TERM_BAND[0] <= r <= MAIN_TERM_BAND[1], f"ratio {r:.6g}")],
        )
        rows.append(row)
        band_rows.append((d, r))
        y = 1.0 / d
        if y >= 100.0:
            T = inverse_ladder(y, ctx)
            lhs = ctx.table.fourth_moment(T)
            rhs = y * C0 * math.log(y) ** 4
            rows.append(
                ReportRow(
                    parameters={"form": "inverse", "delta": d, "T": T},
                    lhs=lhs,
                    rhs=rhs,
                    ratio=_ratio(lhs, rhs),
                    aux={"x": y, "weighted": value, "match": _ratio(lhs, value)},
                    checks=[Check("inverse_identity", True, abs(lhs / value - 1) <= IDENTITY_TOL, "I(M2(y)) = W(y)")],
                )
            )
    checks = []
    if len(band_rows) >= 2:
        (d_big, r_big), (d_small, r_small) = band_rows[0], band_rows[-1]
        ok = abs(r_small - 1) <= abs(r_big - 1) + TREND_SLACK
        checks.append(
            Check("trend", False, ok, f"|r-1| at delta={d_small:g}: {abs(r_small - 1):.4g}; at delta={d_big:g}: {abs(r_big - 1):.4g}")
        )
    meta = _meta(ctx, started, band=list(MAIN_TERM_BAND), trend_slack=TREND_SLACK)
    return VerificationReport("laplace", rows, meta, checks)


# ---------------------------------------------------------------- phi2''


def phi2pp_scale(T: float) -> float:
    """log^4 T (log log T)^2 / T."""
    L = math.log(T)
    return L**4 * math.log(L) ** 2 / T


def verify_phi2pp_bound(grid, ctx: WeightedMomentContext) -> VerificationReport:
    """W''(phi_2(T)) against log^4 T (log log T)^2 / T; Q against log^3 y / y^3."""
    started = time.time()
    rows = []
    for T in sorted(_require_grid(grid, "T")):
        y = solve_phi2(T, ctx).phi2
        J, Q = phi2_second_parts(y, ctx)
        value = J + Q
        scale = phi2pp_scale(T)
        normalized = abs(value) / scale
        q_const = abs(Q) * y**3 / math.log(y) ** 3
        rows.append(
            ReportRow(
                parameters={"T": T},
                lhs=value,
                rhs=scale,
                ratio=_ratio(value, scale),
                aux={"phi2": y, "J": J, "Q": Q, "normalized": normalized, "Q_constant": q_const},
                checks=[Check("finite", True, math.isfinite(normalized), "")],
            )
        )
    checks = []
    if len(rows) >= 2:
        lo, hi = rows[0], rows[-1]
        a, b = lo.aux["normalized"], hi.aux["normalized"]
        checks.append(
            Check(
                "growth",
                False,
                b <= PHI2PP_GROWTH * a,
                f"normalized {b:.4g} at T={hi.parameters['T']:g} vs {a:.4g} at T={lo.parameters['T']:g}",
            )
        )
    meta = _meta(ctx, started, growth=PHI2PP_GROWTH)
    meta["Q_constant_max"] = max(r.aux["Q_constant"] for r in rows)
    return VerificationReport("phi2pp", rows, meta, checks)


# ------------------------------------------------------------------ chord


def default_chord_width(T: float) -> float:
    return T**0.93


def verify_chord(pairs, ctx: WeightedMomentContext) -> VerificationReport:
    """Chord slope over [T, T+U] against 1 + O(1/log T)."""
    started = time.time()
    pairs = [(float(T), float(U)) for T, U in pairs]
    if not pairs:
        raise DomainError("chord grid is empty")
    rows = []
    for T, U in sorted(pairs):
        slope = chord_slope(T, U, ctx)
        L = math.log(T)
        # bracket arithmetic: phi2(T+U) < 5(T+U)/4 and phi2(T) > 4T/5
        upper = (1.25 * (T + U) - 0.8 * T) / U
        rows.append(
            ReportRow(
                parameters={"T": T, "U": U},
                lhs=slope,
                rhs=1.0,
                ratio=slope,
                aux={"scaled": (slope - 1) * L, "bracket_upper": upper},
                checks=[
                    Check("positive", True, slope > 0, f"slope {slope:.6g}"),
                    Check("bracket_algebra", True, slope < upper, f"slope {slope:.6g} < {upper:.6g}"),
                    Check("band", False, abs(slope - 1) <= CHORD_BAND / L, f"|slope-1| {abs(slope - 1):.4g} vs {CHORD_BAND / L:.4g}"),
                ],
            )
        )
    checks = []
    Ts = sorted({T for T, _ in pairs})
    if len(Ts) >= 2:
        first = next(r for r in rows if r.parameters["T"] == Ts[0])
        last = next(r for r in rows if r.parameters["T"] == Ts[-1])
        a, b = abs(first.lhs - 1), abs(last.lhs - 1)
        checks.append(Check("trend", False, b <= a + TREND_SLACK, f"|slope-1|: {b:.4g} at T={Ts[-1]:g}, {a:.4g} at T={Ts[0]:g}"))
    meta = _meta(ctx, started, band_constant=CHORD_BAND, trend_slack=TREND_SLACK)
    meta["scaled_max_abs"] = max(abs(r.aux["scaled"]) for r in rows)
    return VerificationReport("chord", rows, meta, checks)


REPORTS = {
    "theorem": verify_theorem,
    "phi2-near-t": verify_lemma_phi2_near_T,
    "laplace": verify_laplace,
    "phi2pp": verify_phi2pp_bound,
    "chord": verify_chord,
}

__all__ = [
    "Check",
    "ReportRow",
    "VerificationReport",
    "verify_theorem",
    "verify_lemma_phi2_near_T",
    "verify_laplace",
    "verify_phi2pp_bound",
    "verify_chord",
    "theorem_rhs",
    "theorem_window",
    "laplace_main",
    "ingham_main",
]
