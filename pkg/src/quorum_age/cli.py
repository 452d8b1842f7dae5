"""Command-line front end: ``quorum-age {analyze,approx,optimize,simulate,sweep}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import asdict

from .analytics import approx_average_age, exact_average_age, optimal_write_quorum
from .experiments import SimOptions, emit_table, sweep_grid, write_atomic
from .model import QuorumConfig, ShiftedExponential
from .simulator import replicate

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _common(p: argparse.ArgumentParser, with_w: bool = True, multi: bool = False):
    p.add_argument("--n", type=int, required=True, help="number of nodes")
    if with_w:
        p.add_argument("--w", type=int, required=True, help="write quorum size")
    if multi:
        p.add_argument("--r", type=int, nargs="+", required=True, help="read quorum size(s)")
        p.add_argument("--lambda", dest="rate", type=float, nargs="+", default=[1.0],
                       help="exponential rate(s) of the write delay")
    else:
        p.add_argument("--r", type=int, required=True, help="read quorum size")
        p.add_argument("--lambda", dest="rate", type=float, default=1.0,
                       help="exponential rate of the write delay")
    p.add_argument("--c", dest="shift", type=float, default=1.0, help="delay shift")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", default="-", help="output path (default: stdout)")


def _sim_flags(p: argparse.ArgumentParser, replications: int = 1):
    p.add_argument("--intervals", type=int, default=100_000,
                   help="write intervals per replication, warmup included")
    p.add_argument("--warmup", type=int, default=1000)
    p.add_argument("--replications", type=int, default=replications)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--workers", type=int, default=1, help="threads for replications/sweep points")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="quorum-age",
        description="Average age of information read from an n-node quorum store.",
    )
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    _common(sub.add_parser("analyze", help="exact average age and its components"))
    _common(sub.add_parser("approx", help="large-n approximation of the average age"))
    _common(sub.add_parser("optimize", help="age-optimal write quorum for a given r"), with_w=False)
    p = sub.add_parser("simulate", help="Monte Carlo estimate of the average age")
    _common(p)
    _sim_flags(p)
    p = sub.add_parser("sweep", help="age versus write quorum over a grid of r and lambda")
    _common(p, with_w=False, multi=True)
    p.add_argument("--w-values", type=int, nargs="+", default=None,
                   help="write quorum sizes to evaluate (default: every 1..n)")
    p.add_argument("--simulate", action="store_true", help="add simulated ages to every row")
    _sim_flags(p)
    return ap


def _validate(args) -> None:
    rates = args.rate if isinstance(args.rate, list) else [args.rate]
    rs = args.r if isinstance(args.r, list) else [args.r]
    try:
        for rate in rates:
            ShiftedExponential(rate, args.shift)
        w = getattr(args, "w", None)
        for r in rs:
            QuorumConfig(args.n, args.n if w is None else w, r)
        if args.command == "sweep" and args.w_values:
            for wv in args.w_values:
                QuorumConfig(args.n, wv, rs[0])
    except (TypeError, ValueError) as e:
        raise UsageError(str(e)) from e
    if args.command == "approx" and args.w >= args.n:
        raise UsageError("approximation requires w < n")
    if args.command == "optimize" and args.shift <= 0:
        raise UsageError("optimize requires --c > 0")
    if hasattr(args, "intervals"):
        if args.warmup < 0:
            raise UsageError("--warmup must be >= 0")
        if args.intervals <= args.warmup:
            raise UsageError("--intervals must exceed --warmup")
        if args.replications < 1:
            raise UsageError("--replications must be >= 1")
        if args.workers < 1:
            raise UsageError("--workers must be >= 1")


def _render_record(rec: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rec, indent=2) + "\n"
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(rec.keys())
    wr.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in rec.values()])
    return buf.getvalue()


def _write(text: str, output: str) -> None:
    if output == "-":
        sys.stdout.write(text)
    else:
        write_atomic(text, output)


def run(args) -> None:
    cmd = args.command
    if cmd == "sweep":
        sim = None
        if args.simulate:
            sim = SimOptions(args.intervals, args.warmup, args.replications, args.seed)
        rows = sweep_grid(args.n, args.r, args.rate, args.shift, args.w_values, sim, args.workers)
        emit_table(rows, args.format, None if args.output == "-" else args.output)
        return

    d = ShiftedExponential(args.rate, args.shift)
    base = {"n": args.n}
    if cmd == "optimize":
        opt = optimal_write_quorum(args.n, args.r, d)
        rec = {**base, "r": args.r, "lambda": d.rate, "c": d.shift,
               "w_star": opt.w, "omega_star": opt.omega, "w_continuous": opt.w_continuous,
               "total_age": opt.age,
               "regime": "non-strict" if opt.non_strict else "strict"}
    else:
        cfg = QuorumConfig(args.n, args.w, args.r)
        base.update(w=cfg.w, r=cfg.r, **{"lambda": d.rate, "c": d.shift})
        if cmd == "analyze":
            rec = {**base, "regime": cfg.regime().value, **asdict(exact_average_age(cfg, d))}
        elif cmd == "approx":
            rec = {**base, "regime": cfg.regime().value, "approx_age": approx_average_age(cfg, d)}
        else:
            stats = replicate(cfg, d, args.intervals, args.replications, args.seed,
                              args.warmup, args.workers)
            rec = {**base, "intervals": args.intervals, "warmup": args.warmup,
                   "replications": args.replications, "seed": args.seed, **asdict(stats)}
            if rec["std_error"] != rec["std_error"]:
                rec["std_error"] = None
    _write(_render_record(rec, args.format), args.output)


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _validate(args)
    except UsageError as e:
        ap.print_usage(sys.stderr)
        print(f"quorum-age: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        run(args)
    except OSError as e:
        print(f"quorum-age: error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, ArithmeticError, RuntimeError) as e:
        print(f"quorum-age: error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
