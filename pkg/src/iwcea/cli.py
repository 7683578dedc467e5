"""Command-line interface: ``iwcea {solve,bench,lp,gen,validate}``.

Exit codes: 0 success, 2 unreadable/invalid instance, 3 LP failure, 4 bad flags.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import bench
from .coding import IWCEA, WCEA
from .ea import ONE_GENE, PER_GENE, EaConfig
from .instance import (InstanceFormatError, generate_random, load, preprocess,
                       serialize_orlib, validate)
from .lp import LpError, bounds_lp, format_solution, relax_mkp, solve, with_hyperplane

EXIT_OK = 0
EXIT_INSTANCE = 2
EXIT_LP = 3
EXIT_FLAGS = 4

log = logging.getLogger("iwcea")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FLAGS, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _instance_args(p, multiple=False):
    if multiple:
        p.add_argument("--instance", nargs="+", required=True, type=Path, metavar="PATH")
    else:
        p.add_argument("--instance", required=True, type=Path, metavar="PATH")
    p.add_argument("--index", type=int, default=None,
                   help="0-based instance index within the file (default: all)")
    p.add_argument("--format", dest="header", choices=["auto", "count", "single"], default="auto",
                   help="file layout: leading instance count, or one bare instance")
    p.add_argument("--preprocess", action="store_true",
                   help="fix oversized items to 0 and drop slack constraints instead of rejecting")


def _ea_args(p, algo_choices):
    p.add_argument("--algo", choices=algo_choices, default=IWCEA)
    p.add_argument("--pop-size", type=_positive_int, default=100)
    p.add_argument("--max-evals", type=_positive_int, default=10**6)
    p.add_argument("--gamma", type=float, default=0.05)
    p.add_argument("--runs", type=_positive_int, default=30)
    p.add_argument("--seed", type=int, default=0, help="base seed; run k uses seed+k")
    p.add_argument("--jobs", type=_positive_int, default=1, help="parallel worker processes")
    p.add_argument("--wcea-mutation", choices=[PER_GENE, ONE_GENE], default=PER_GENE)
    p.add_argument("--reject-cap", type=_positive_int, default=10**5)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="iwcea", description="Weight-coded EAs for the 0-1 multidimensional knapsack problem.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="run an algorithm repeatedly on instances")
    _instance_args(p)
    _ea_args(p, [IWCEA, WCEA])
    p.add_argument("--z", type=float, default=None, help="override the greedy lower bound (iwcea)")
    p.add_argument("--output", type=Path, default=None,
                   help="per-run CSV path; aggregates go to <stem>.agg.csv (default: stdout)")

    p = sub.add_parser("bench", help="aggregate statistics over several files and algorithms")
    _instance_args(p, multiple=True)
    _ea_args(p, [IWCEA, WCEA, "both"])
    p.add_argument("--output", type=Path, default=None, help="aggregate CSV path (default: stdout)")
    p.add_argument("--runs-csv", type=Path, default=None, help="also write per-run rows here")

    p = sub.add_parser("lp", help="solve and print an LP relaxation")
    _instance_args(p)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--hyperplane", type=float, default=None, metavar="K",
                       help="add the equality row sum(x) = K")
    group.add_argument("--bounds", type=float, default=None, metavar="Z",
                       help="solve the max/min sum(x) LPs with the cut p.x >= Z+1")

    p = sub.add_parser("gen", help="generate a random instance in OR-Library format")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--m", type=_positive_int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--correlated", action="store_true", help="CB-style correlated profits")
    p.add_argument("--output", type=Path, default=None)

    p = sub.add_parser("validate", help="report well-statedness violations")
    _instance_args(p)
    return parser


def _load(args):
    path = args.instance
    try:
        instances = load(path, index=args.index, header=args.header)
    except FileNotFoundError:
        raise CliError(f"instance file not found: {path}", EXIT_INSTANCE)
    except (InstanceFormatError, ValueError, IndexError, OSError) as exc:
        raise CliError(f"{path}: {exc}", EXIT_INSTANCE)
    return instances


def _prepared(args, instances):
    out = []
    for inst in instances:
        report = validate(inst)
        if report.ok:
            out.append(inst)
        elif getattr(args, "preprocess", False):
            pre = preprocess(inst)
            log.warning("%s: fixed items %s to 0, dropped constraints %s", inst.name,
                        list(pre.fixed_zero), list(pre.dropped_constraints))
            out.append(pre.instance)
        else:
            raise CliError(f"{inst.name} is not well-stated: {report.violations} "
                           "(use --preprocess)", EXIT_INSTANCE)
    return out


def _config(args, algo):
    return EaConfig(mode=algo, pop_size=args.pop_size, max_evals=args.max_evals,
                    gamma=args.gamma, seed=args.seed, reject_cap=args.reject_cap,
                    mutation=args.wcea_mutation if algo == WCEA else ONE_GENE)


def _run(inst, cfg, args, z=None):
    if z is not None:
        from .ea import solve as ea_solve

        return [ea_solve(inst, replace(cfg, seed=args.seed + k), z=z) for k in range(args.runs)]
    return bench.run_many(inst, cfg, args.runs, base_seed=args.seed, workers=args.jobs)


def cmd_solve(args, out):
    instances = _prepared(args, _load(args))
    results, stats = [], []
    for inst in instances:
        rs = _run(inst, _config(args, args.algo), args, z=args.z)
        results.extend(rs)
        stats.append(bench.aggregate(rs, inst.known_best))
    if args.output:
        bench.emit_csv(results, args.output)
        bench.emit_csv(stats, args.output.with_suffix(".agg.csv"))
    else:
        bench.emit_csv(results, out)
        out.write("\n")
        bench.emit_csv(stats, out)
    return EXIT_OK


def cmd_bench(args, out):
    algos = [IWCEA, WCEA] if args.algo == "both" else [args.algo]
    results, stats = [], []
    for path in args.instance:
        sub = argparse.Namespace(**{**vars(args), "instance": path})
        for inst in _prepared(args, _load(sub)):
            for algo in algos:
                rs = _run(inst, _config(args, algo), args)
                results.extend(rs)
                stats.append(bench.aggregate(rs, inst.known_best))
                log.info("%s %s: mean gap %.4f%%", inst.name, algo, 100 * stats[-1].mean_gap)
    bench.emit_csv(stats, args.output or out)
    if args.runs_csv:
        bench.emit_csv(results, args.runs_csv)
    return EXIT_OK


def cmd_lp(args, out):
    instances = _prepared(args, _load(args))
    for inst in instances:
        out.write(f"# {inst.name}\n")
        if args.bounds is not None:
            for sense in ("max", "min"):
                out.write(f"## {sense} sum(x) with p.x >= {args.bounds + 1:g}\n")
                out.write(format_solution(solve(bounds_lp(inst, args.bounds, sense))))
            continue
        lp = relax_mkp(inst)
        if args.hyperplane is not None:
            lp = with_hyperplane(lp, args.hyperplane)
        out.write(format_solution(solve(lp)))
    return EXIT_OK


def cmd_gen(args, out):
    try:
        inst = generate_random(args.n, args.m, args.alpha, args.seed, correlated=args.correlated)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_FLAGS)
    text = serialize_orlib([inst])
    if args.output:
        args.output.write_text(text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_validate(args, out):
    worst = EXIT_OK
    for inst in _load(args):
        report = validate(inst)
        if report.ok:
            out.write(f"{inst.name}: ok\n")
            continue
        worst = EXIT_INSTANCE
        for kind, i, j in report.violations:
            where = ", ".join(f"{k}={v}" for k, v in (("i", i), ("j", j)) if v is not None)
            out.write(f"{inst.name}: {kind} ({where})\n")
    return worst


COMMANDS = {"solve": cmd_solve, "bench": cmd_bench, "lp": cmd_lp, "gen": cmd_gen,
            "validate": cmd_validate}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, out)
    except CliError as exc:
        print(f"iwcea: {exc}", file=sys.stderr)
        return exc.code
    except LpError as exc:
        print(f"iwcea: LP failure: {exc}", file=sys.stderr)
        return EXIT_LP


if __name__ == "__main__":
    sys.exit(main())
