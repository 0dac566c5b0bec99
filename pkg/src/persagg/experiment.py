"""Batch experiment runner: generate, compile, solve, tabulate.

Result rows use a fixed column order (family, seed, T, N, formulation,
status, lb, opt, gap, nodes, seconds). The seconds column is reported for
context only and is excluded from determinism comparisons. Every batch
embeds a bound-ordering audit: if any instance shows LB_agg != LB_per or
LB_per < LB_p0 beyond tolerance, the batch is marked FAILED.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .aggregation import compile_agg
from .branch_bound import MipParams, solve_mip
from .perspective import compile_p0, compile_per
from .problem import ProblemSpec
from .sep import LCParams, SQPParams, gen_lc_instance, gen_sqp_instance
from .solver import OPTIMAL, SolverTolerances, solve_relaxation
from .uc import build_3bin, build_uc, gen_fleet

CSV_COLUMNS = ["family", "seed", "T", "N", "formulation", "status", "lb", "opt",
               "gap", "nodes", "seconds"]

_AUDIT_TOL = 1e-6


def relative_gap(opt: float, lb: float) -> float:
    """|opt - lb| / |opt|; for opt = 0 the absolute difference is used."""
    if opt == 0.0:
        return abs(opt - lb)
    return abs(opt - lb) / abs(opt)


@dataclass
class BatchResult:
    rows: list
    verdict: str  # OK | FAILED
    audit_messages: list = field(default_factory=list)


def _mip_params(config) -> MipParams:
    mip = dict(config.get("mip", {}))
    return MipParams(**mip)


def _build_instance(family: str, inst: dict):
    """Returns (spec_or_fleet, T, N). UC returns the FleetSpec."""
    if family == "lc":
        spec, _ = gen_lc_instance(LCParams(T=inst["T"], N=inst["N"], seed=inst["seed"]))
        return spec, inst["T"], inst["N"]
    if family == "sqp":
        spec, _ = gen_sqp_instance(
            SQPParams(T=inst["T"], N=inst["N"], m=inst.get("m", 4), seed=inst["seed"])
        )
        return spec, inst["T"], inst["N"]
    if family == "uc":
        fleet = gen_fleet(
            inst.get("num_classes", 2), inst.get("max_count", 3),
            inst.get("periods", 12), inst["seed"],
        )
        return fleet, inst.get("periods", 12), inst.get("num_classes", 2)
    raise ValueError(f"unknown family: {family}")


def _compile(family: str, built, formulation: str, mode: str):
    if family == "uc":
        if formulation == "3bin":
            return build_3bin(built, mode)
        spec = build_uc(built)
    else:
        if formulation == "3bin":
            raise ValueError("3bin applies to the uc family only")
        spec = built
    comp = {"p0": compile_p0, "per": compile_per, "agg": compile_agg}[formulation]
    return comp(spec, mode)


def run_experiment(config: dict) -> BatchResult:
    family = config["family"]
    formulations = list(config.get("formulations", ["p0", "per", "agg"]))
    reference = config.get("reference", "agg")
    solve_integer = bool(config.get("solve_integer", True))
    params = _mip_params(config)
    tol = SolverTolerances()
    rows = []
    audit = []
    uc_spec_cache = {}

    for inst in config["instances"]:
        built, T, N = _build_instance(family, inst)
        if family == "uc":
            uc_spec_cache[id(built)] = build_uc(built)
        lbs = {}
        times = {}
        statuses = {}
        for form in formulations:
            t0 = time.monotonic()
            if family == "uc" and form != "3bin":
                model = {"p0": compile_p0, "per": compile_per, "agg": compile_agg}[form](
                    uc_spec_cache[id(built)], "relaxed")
            else:
                model = _compile(family, built, form, "relaxed")
            sol = solve_relaxation(model, tol)
            statuses[form] = sol.status
            lbs[form] = float(sol.primal_objective) if sol.status == OPTIMAL else float("nan")
            times[form] = time.monotonic() - t0
        opt = float("nan")
        nodes = {form: 0 for form in formulations}
        if solve_integer:
            form = reference if reference in formulations else formulations[-1]
            if family == "uc" and form != "3bin":
                model = {"p0": compile_p0, "per": compile_per, "agg": compile_agg}[form](
                    uc_spec_cache[id(built)], "integer")
            else:
                model = _compile(family, built, form, "integer")
            t0 = time.monotonic()
            res = solve_mip(model, params)
            times[form] += time.monotonic() - t0
            opt = res.incumbent_value
            nodes[form] = res.nodes_explored
        for form in formulations:
            gap = relative_gap(opt, lbs[form]) if np.isfinite(opt) else float("nan")
            rows.append({
                "family": family, "seed": inst["seed"], "T": T, "N": N,
                "formulation": form, "status": statuses[form],
                "lb": lbs[form], "opt": opt, "gap": gap,
                "nodes": nodes[form], "seconds": times[form],
            })
        # embedded bound-ordering audit
        if "per" in lbs and "agg" in lbs:
            if abs(lbs["agg"] - lbs["per"]) > _AUDIT_TOL * (1.0 + abs(lbs["per"])):
                audit.append(f"seed {inst['seed']}: LB_agg != LB_per")
        if "per" in lbs and "p0" in lbs:
            if lbs["per"] < lbs["p0"] - _AUDIT_TOL * (1.0 + abs(lbs["p0"])):
                audit.append(f"seed {inst['seed']}: LB_per < LB_p0")
    return BatchResult(rows=rows, verdict="FAILED" if audit else "OK", audit_messages=audit)


def rows_to_csv(rows, include_seconds: bool = True) -> str:
    cols = CSV_COLUMNS if include_seconds else CSV_COLUMNS[:-1]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in rows:
        out = []
        for c in cols:
            v = row[c]
            out.append(format(v, ".12g") if isinstance(v, float) else v)
        writer.writerow(out)
    return buf.getvalue()


def rows_to_json(result: BatchResult) -> str:
    doc = {
        "verdict": result.verdict,
        "audit": result.audit_messages,
        "rows": result.rows,
    }
    return json.dumps(doc, indent=1, default=float) + "\n"


def summarize(rows) -> dict:
    """Mean gap and bound per formulation, table style."""
    out = {}
    for form in sorted({r["formulation"] for r in rows}):
        sel = [r for r in rows if r["formulation"] == form]
        gaps = [r["gap"] for r in sel if np.isfinite(r["gap"])]
        out[form] = {
            "instances": len(sel),
            "mean_gap": float(np.mean(gaps)) if gaps else float("nan"),
            "max_gap": float(np.max(gaps)) if gaps else float("nan"),
            "mean_nodes": float(np.mean([r["nodes"] for r in sel])),
        }
    return out


# -- cross-check corpus ----------------------------------------------------


def cross_check(config: dict) -> list:
    """Oracle checks over a small corpus. Returns verdict rows; the caller
    maps any FAIL to a nonzero exit code. INCONCLUSIVE never fails a run."""
    from .oracle import brute_optimum, check_hull_equiv, check_lb_order, gen_random_omega

    verdicts = []
    for inst in config.get("lb_order", []):
        built, _, _ = _build_instance(inst["family"], inst)
        spec = build_uc(built) if inst["family"] == "uc" else built
        lb0, lbp, lba, verdict = check_lb_order(spec)
        verdicts.append({
            "check": "lb_order", "detail": f"{inst['family']} seed {inst['seed']}",
            "verdict": verdict, "values": [lb0, lbp, lba],
        })
    for hull in config.get("hull", []):
        omega = gen_random_omega(hull["seed"])
        rep = check_hull_equiv(omega, hull.get("r", 2), hull.get("dirs", 20), hull["seed"])
        verdicts.append({
            "check": "hull", "detail": f"seed {hull['seed']}",
            "verdict": "INCONCLUSIVE" if rep.verdict == "SKIPPED" else rep.verdict,
            "values": [rep.margin, rep.worst_rel],
        })
    params = MipParams(**dict(config.get("mip", {})))
    for inst in config.get("mip_vs_brute", []):
        built, _, _ = _build_instance(inst["family"], inst)
        spec = build_uc(built) if inst["family"] == "uc" else built
        ref = brute_optimum(spec)
        res = solve_mip(compile_per(spec, "integer"), params)
        val = res.incumbent_value
        if np.isinf(ref) and res.status == "infeasible":
            ok = True
        else:
            ok = np.isfinite(val) and abs(val - ref) <= 1e-6 * (1.0 + abs(ref))
        verdicts.append({
            "check": "mip_vs_brute", "detail": f"{inst['family']} seed {inst['seed']}",
            "verdict": "PASS" if ok else "FAIL", "values": [ref, val],
        })
    return verdicts
