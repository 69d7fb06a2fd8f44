"""Command-line front end: ``zeta-ladder <command> [options]``.

Exit codes: 0 pass, 1 soft band/trend failure, 2 usage or domain error,
3 convergence or accuracy failure, 4 cache problem, 5 a hard invariant of a
verification report failed.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    AccuracyError,
    BracketError,
    CacheError,
    ConvergenceError,
    DomainError,
)
from .ladder import reverse_interval, solve_phi2
from .moments import MomentTable, load_table, read_header
from .quadrature import PanelPolicy
from .verify import (
    REPORTS,
    VerificationReport,
    default_chord_width,
    dumps_17,
    format_value,
)
from .weighted import MuFamily, WeightedMomentContext
from .zeta_core import ZEvaluator

CACHE_ENV = "ZETA_LADDER_CACHE"
DEFAULT_CACHE = Path("~/.cache/zeta-ladder/moments.csv")

EXIT_CODES = {
    "pass": 0,
    "soft": 1,
    "usage": 2,
    "convergence": 3,
    "cache": 4,
    "hard": 5,
}


@dataclass(frozen=True)
class RunConfig:
    rs_terms: int = 3
    crossover_t: float = 2500.0
    target_abs_err: float = 1e-8
    gl_order: int = 16
    panels_per_oscillation: float = 4.0
    rel_tol: float = 1e-8
    omega1: float = 1.0
    omega2: float = 1.0
    cache_path: Path | None = None
    output_format: str = "csv"
    solver_tol: float = 1e-9
    threads: int = 1

    @classmethod
    def from_args(cls, args):
        cache = args.cache or os.environ.get(CACHE_ENV) or str(DEFAULT_CACHE)
        return cls(
            rs_terms=args.rs_terms,
            crossover_t=args.crossover,
            target_abs_err=args.target_err,
            gl_order=args.gl_order,
            panels_per_oscillation=args.panels_per_oscillation,
            rel_tol=args.rel_tol,
            omega1=args.omega1,
            omega2=args.omega2,
            cache_path=Path(cache).expanduser(),
            output_format=args.format,
            solver_tol=args.tol,
            threads=args.threads,
        )

    def evaluator(self) -> ZEvaluator:
        return ZEvaluator(self.rs_terms, self.crossover_t, self.target_abs_err)

    def policy(self) -> PanelPolicy:
        return PanelPolicy(self.gl_order, self.panels_per_oscillation, self.rel_tol)

    def table(self) -> MomentTable:
        ev, pol = self.evaluator(), self.policy()
        if self.cache_path.exists():
            return load_table(self.cache_path, ev, pol, threads=self.threads)
        return MomentTable(ev, pol, path=self.cache_path, threads=self.threads)

    def context(self) -> WeightedMomentContext:
        ev, pol = self.evaluator(), self.policy()
        return WeightedMomentContext(
            mu=MuFamily(self.omega1, self.omega2),
            evaluator=ev,
            policy=pol,
            table=self.table(),
            threads=self.threads,
        )


def render_records(name, records, fmt) -> str:
    if fmt == "structured":
        return dumps_17({"name": name, "rows": records}) + "\n"
    columns = list(records[0]) if records else []
    lines = [",".join(columns)]
    lines.extend(",".join(format_value(r[c]) for c in columns) for r in records)
    return "\n".join(lines) + "\n"


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------- commands


def cmd_z(cfg, args):
    ev = cfg.evaluator()
    records = [{"t": float(t), "Z": ev.hardy_z(float(t))} for t in args.t]
    _emit(render_records("z", records, cfg.output_format), args.out)
    return 0


def cmd_moment(cfg, args):
    table = cfg.table()
    T = float(args.T)
    record = {"T": T, "I": table.fourth_moment(T)}
    _emit(render_records("moment", [record], cfg.output_format), args.out)
    return 0


def cmd_ladder(cfg, args):
    ctx = cfg.context()
    p = solve_phi2(args.T, ctx, cfg.solver_tol)
    record = {"T": p.T, "phi2": p.phi2, "residual": p.residual, "iterations": p.iterations}
    _emit(render_records("ladder", [record], cfg.output_format), args.out)
    return 0


def cmd_reverse(cfg, args):
    ctx = cfg.context()
    r = reverse_interval(args.T, args.U, ctx, cfg.solver_tol)
    record = {"T": r.T, "U": r.U, "T_ring": r.T_ring, "TU_ring": r.TU_ring}
    _emit(render_records("reverse", [record], cfg.output_format), args.out)
    return 0


def merge_reports(reports) -> VerificationReport:
    first = reports[0]
    rows = [row for r in reports for row in r.rows]
    checks = [c for r in reports for c in r.checks]
    return VerificationReport(first.name, rows, dict(first.meta), checks)


def build_report(name, cfg, args, ctx) -> VerificationReport:
    grid_T = args.T if args.T is not None else DEFAULT_GRIDS[name]
    if name == "theorem":
        if not grid_T:
            raise DomainError("theorem grid is empty")
        return merge_reports([REPORTS[name](T, ctx, args.epsilon) for T in sorted(grid_T)])
    if name == "phi2-near-t":
        return REPORTS[name](grid_T, ctx, cfg.solver_tol)
    if name == "laplace":
        deltas = args.delta if args.delta is not None else DEFAULT_GRIDS["laplace"]
        return REPORTS[name](deltas, ctx)
    if name == "phi2pp":
        return REPORTS[name](grid_T, ctx)
    if name == "chord":
        if args.U is not None and len(args.U) != len(grid_T):
            raise DomainError("--U needs one width per --T value")
        widths = args.U if args.U is not None else [default_chord_width(T) for T in grid_T]
        return REPORTS[name](list(zip(grid_T, widths)), ctx)
    raise DomainError(f"unknown report {name!r}")


DEFAULT_GRIDS = {
    "theorem": [1000.0],
    "phi2-near-t": [100.0, 1000.0, 10000.0],
    "laplace": [1e-2, 1e-3, 1e-4],
    "phi2pp": [1000.0, 10000.0],
    "chord": [1000.0, 10000.0],
}


def cmd_verify(cfg, args):
    ctx = cfg.context()
    report = build_report(args.name, cfg, args, ctx)
    text = report.to_structured() if cfg.output_format == "structured" else report.to_csv()
    _emit(text, args.out)
    for f in report.summary()["failed"]:
        print(f"{f['kind']} check failed: {f['check']} ({f['detail']})", file=sys.stderr)
    return report.exit_code


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".cells.npz")


def cmd_cache(cfg, args):
    path = cfg.cache_path
    if args.action == "build":
        if args.T is None:
            raise DomainError("cache build needs a target height T")
        T = float(args.T)
        if not (math.isfinite(T) and T >= 0):
            raise DomainError("cache build needs finite T >= 0")
        table = cfg.table()
        table.extend_to(T, exact=True)
        if not path.exists():
            table.save()
        return cmd_cache_info(cfg, args)
    if args.action == "info":
        return cmd_cache_info(cfg, args)
    if args.action == "clear":
        if not args.yes:
            print(f"refusing to delete {path} without --yes", file=sys.stderr)
            return EXIT_CODES["usage"]
        removed = []
        for p in (path, _sidecar(path)):
            if p.exists():
                p.unlink()
                removed.append(str(p))
        print(f"removed {len(removed)} file(s)", file=sys.stderr)
        return 0
    raise DomainError(f"unknown cache action {args.action!r}")


def cmd_cache_info(cfg, args):
    path = cfg.cache_path
    if not path.exists():
        raise CacheError(f"no cache at {path}")
    head = read_header(path)
    with path.open() as fh:
        rows = sum(1 for _ in fh) - 2
    expected = MomentTable(cfg.evaluator(), cfg.policy(), dT=head["dT"]).fingerprint
    record = {
        "path": str(path),
        "rows": rows,
        "dT": head["dT"],
        "T_max": (rows - 1) * head["dT"],
        "fingerprint": head["fingerprint"],
        "version": head["version"],
        "compatible": head["fingerprint"] == expected,
        "sidecar": _sidecar(path).exists(),
    }
    _emit(render_records("cache", [record], cfg.output_format), getattr(args, "out", None))
    return 0


# ----------------------------------------------------------------- parser


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("configuration")
    g.add_argument("--rs-terms", type=int, default=3, help="Riemann-Siegel corrections after C0 (0-3)")
    g.add_argument("--crossover", type=float, default=2500.0, help="height below which Z is summed directly")
    g.add_argument("--target-err", type=float, default=1e-8, help="absolute accuracy target for Z")
    g.add_argument("--rel-tol", type=float, default=1e-8, help="quadrature tolerance per panel")
    g.add_argument("--gl-order", type=int, default=16, help="Gauss-Legendre nodes per panel")
    g.add_argument("--panels-per-oscillation", type=float, default=4.0)
    g.add_argument("--omega1", type=float, default=1.0)
    g.add_argument("--omega2", type=float, default=1.0)
    g.add_argument("--tol", type=float, default=1e-9, help="relative residual for ladder solves")
    g.add_argument("--epsilon", type=float, default=0.01, help="exponent slack in U = T^(13/14 + 2 eps)")
    g.add_argument("--cache", default=None, help=f"moment table path (default ${CACHE_ENV} or {DEFAULT_CACHE})")
    g.add_argument("--format", choices=("csv", "structured"), default="csv")
    g.add_argument("--out", default=None, help="write the result here instead of stdout")
    g.add_argument("--threads", type=_positive_int, default=1)
    g.add_argument("--yes", action="store_true", help="confirm destructive cache actions")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="zeta-ladder", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("z", parents=[common], help="Hardy Z(t)")
    p.add_argument("t", type=float, nargs="+")
    p.set_defaults(func=cmd_z)

    p = sub.add_parser("moment", parents=[common], help="fourth moment I(T)")
    p.add_argument("T", type=float)
    p.set_defaults(func=cmd_moment)

    p = sub.add_parser("ladder", parents=[common], help="solve for phi2(T)")
    p.add_argument("T", type=float)
    p.set_defaults(func=cmd_ladder)

    p = sub.add_parser("reverse", parents=[common], help="preimage of [T, T+U]")
    p.add_argument("T", type=float)
    p.add_argument("U", type=float)
    p.set_defaults(func=cmd_reverse)

    p = sub.add_parser("verify", parents=[common], help="write a verification report")
    p.add_argument("name", choices=sorted(REPORTS))
    p.add_argument("--T", type=float, nargs="*", default=None, help="heights (theorem, phi2-near-t, phi2pp, chord)")
    p.add_argument("--U", type=float, nargs="*", default=None, help="chord widths, one per T")
    p.add_argument("--delta", type=float, nargs="*", default=None, help="laplace parameters")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("cache", parents=[common], help="build, inspect or clear the moment table")
    p.add_argument("action", choices=("build", "info", "clear"))
    p.add_argument("T", type=float, nargs="?", default=None)
    p.set_defaults(func=cmd_cache)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.from_args(args)
        return args.func(cfg, args)
    except CacheError as exc:
        print(f"cache error: {exc}", file=sys.stderr)
        return EXIT_CODES["cache"]
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_CODES["usage"]
    except (ConvergenceError, BracketError, AccuracyError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CODES["convergence"]


if __name__ == "__main__":
    sys.exit(main())
