"""Command-line harness: gen, compile, solve, experiment, crosscheck."""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .aggregation import compile_agg
from .branch_bound import MipParams, solve_mip
from .conic_model import emit_model, parse_conic_text, parse_json
from .experiment import cross_check, rows_to_csv, rows_to_json, run_experiment, summarize
from .perspective import compile_p0, compile_per
from .problem import spec_from_json, spec_to_json
from .sep import LCParams, SQPParams, gen_lc_instance, gen_sqp_instance
from .solver import SolverTolerances, solve_relaxation
from .uc import build_3bin, build_uc, fleet_to_json, gen_fleet

_COMPILERS = {"p0": compile_p0, "per": compile_per, "agg": compile_agg}


def _write(path, data: bytes):
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def cmd_gen(args) -> int:
    if args.family == "lc":
        spec, meta = gen_lc_instance(LCParams(T=args.T, N=args.N, seed=args.seed))
        _write(args.out, spec_to_json(spec, metadata=meta))
    elif args.family == "sqp":
        spec, meta = gen_sqp_instance(
            SQPParams(T=args.T, N=args.N, m=args.m, seed=args.seed)
        )
        _write(args.out, spec_to_json(spec, metadata=meta))
    elif args.family == "uc":
        fleet = gen_fleet(args.classes, args.max_count, args.periods, args.seed)
        meta = {"family": "uc", "seed": args.seed, "recipe_version": 1}
        _write(args.out, fleet_to_json(fleet, metadata=meta))
    else:
        raise SystemExit(f"unknown family: {args.family}")
    return 0


def _load_spec(path):
    with open(path, "rb") as fh:
        data = fh.read()
    doc = json.loads(data.decode("ascii"))
    if "classes" in doc and doc["classes"] and "unit" in doc["classes"][0]:
        from .uc import fleet_from_json

        return build_uc(fleet_from_json(data)), fleet_from_json(data)
    return spec_from_json(data), None


def cmd_compile(args) -> int:
    spec, fleet = _load_spec(args.instance)
    if args.formulation == "3bin":
        if fleet is None:
            raise SystemExit("3bin compiles only from a fleet instance")
        model = build_3bin(fleet, args.mode)
    else:
        model = _COMPILERS[args.formulation](spec, args.mode)
    _write(args.out, emit_model(model, args.format))
    return 0


def _load_model(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data.startswith(b"CONICTEXT"):
        return parse_conic_text(data)
    return parse_json(data)


def cmd_solve(args) -> int:
    if args.threads != 1:
        print("note: only single-threaded solves are supported; using 1 thread",
              file=sys.stderr)
    model = _load_model(args.model)
    if args.relax or not model.integer:
        sol = solve_relaxation(model, SolverTolerances())
        doc = {
            "status": sol.status, "bound": sol.objective,
            "objective": sol.primal_objective, "max_residual": sol.max_residual,
        }
    else:
        params = MipParams(
            mip_gap=args.mip_gap, time_limit_seconds=args.time_limit
        )
        res = solve_mip(model, params)
        doc = {
            "status": res.status, "objective": res.incumbent_value,
            "bound": res.bound, "gap": res.gap, "nodes": res.nodes_explored,
            "seconds": res.wall_seconds,
        }
    _write(args.out, (json.dumps(doc, indent=1, default=float) + "\n").encode("ascii"))
    return 0


def cmd_experiment(args) -> int:
    with open(args.config, "r", encoding="ascii") as fh:
        config = json.load(fh)
    result = run_experiment(config)
    outdir = args.out or "."
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "results.csv"), "w", encoding="ascii") as fh:
        fh.write(rows_to_csv(result.rows))
    with open(os.path.join(outdir, "results.json"), "w", encoding="ascii") as fh:
        fh.write(rows_to_json(result))
    with open(os.path.join(outdir, "summary.json"), "w", encoding="ascii") as fh:
        json.dump(summarize(result.rows), fh, indent=1, default=float)
        fh.write("\n")
    if not args.no_figures:
        from .figures import render_bound_figure, render_gap_figure

        render_gap_figure(result.rows, os.path.join(outdir, "gaps.png"))
        render_bound_figure(result.rows, os.path.join(outdir, "bounds.png"))
    print(f"{len(result.rows)} rows, batch verdict {result.verdict}")
    for msg in result.audit_messages:
        print("audit:", msg)
    return 0 if result.verdict == "OK" else 1


def cmd_crosscheck(args) -> int:
    with open(args.config, "r", encoding="ascii") as fh:
        config = json.load(fh)
    verdicts = cross_check(config)
    failed = False
    for row in verdicts:
        print(f"{row['check']:14s} {row['detail']:24s} {row['verdict']}")
        if row["verdict"] == "FAIL":
            failed = True
    if args.out:
        _write(args.out, (json.dumps(verdicts, indent=1, default=float) + "\n").encode("ascii"))
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="persagg",
        description="Perspective reformulation toolkit for symmetric "
        "mixed-integer convex programs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--family", required=True, choices=["lc", "sqp", "uc"])
    p.add_argument("--T", type=int, default=10)
    p.add_argument("--N", type=int, default=5)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--classes", type=int, default=2, help="uc: number of unit classes")
    p.add_argument("--max-count", type=int, default=3, help="uc: max units per class")
    p.add_argument("--periods", type=int, default=12, help="uc: horizon length")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("compile", help="compile an instance to a conic model")
    p.add_argument("instance")
    p.add_argument("--formulation", required=True, choices=["p0", "per", "agg", "3bin"])
    p.add_argument("--mode", default="integer", choices=["integer", "relaxed"])
    p.add_argument("--format", default="conic-text", choices=["conic-text", "json"])
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("solve", help="solve a compiled model file")
    p.add_argument("model")
    p.add_argument("--relax", action="store_true", help="solve the relaxation only")
    p.add_argument("--mip-gap", type=float, default=1e-6)
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("experiment", help="run a config-driven batch")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("crosscheck", help="run oracle checks over a corpus")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_crosscheck)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
