"""Best-bound branch-and-bound over conic models with integer marks.

Branching splits a fractional integer variable at floor/ceil. Node order is
best-bound with FIFO tie-break (dfs available). The only heuristic is
round-and-repair: round the integer block, fix it, resolve the continuous
part. With fixed parameters and model bytes the search is deterministic.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

import numpy as np

from .conic_model import ConicModel, LE
from .problem import ProblemSpec
from .solver import (
    INFEASIBLE,
    NUMERICAL_LIMIT,
    OPTIMAL,
    RelaxSolution,
    SolverTolerances,
    solve_relaxation,
)

_HEUR_PERIOD = 10  # round-and-repair at the root and every N-th node


@dataclass(frozen=True)
class MipParams:
    mip_gap: float = 1e-6
    int_tol: float = 1e-6
    node_limit: int = 1_000_000
    time_limit_seconds: float = None
    branching: str = "most_fractional"  # or "pseudo_cost"
    node_order: str = "best_bound"  # or "dfs"
    tolerances: SolverTolerances = SolverTolerances()

    def __post_init__(self):
        if not (0.0 < self.mip_gap < 1.0 and 0.0 < self.int_tol < 1.0):
            raise ValueError("mip_gap and int_tol must lie in (0, 1)")


@dataclass
class SolveResult:
    status: str  # optimal | feasible | infeasible | limit
    incumbent_value: float
    bound: float
    gap: float
    nodes_explored: int
    wall_seconds: float
    incumbent: np.ndarray = None


def _mip_gap_of(incumbent: float, bound: float) -> float:
    if not np.isfinite(incumbent):
        return float("inf")
    return abs(incumbent - bound) / max(1.0, abs(incumbent))


def _box_bound(model: ConicModel, lower, upper) -> float:
    """Objective bound from the variable boxes alone."""
    total = model.obj_const
    for i, c in model.objective.items():
        lo, hi = c * lower[i], c * upper[i]
        total += min(lo, hi)
    return total


def _fractional(sol_x, int_idx, lower, upper, int_tol):
    out = []
    for i in int_idx:
        v = min(max(sol_x[i], lower[i]), upper[i])
        f = abs(v - round(v))
        if f > int_tol:
            out.append((i, v, f))
    return out


class _PseudoCosts:
    def __init__(self):
        self.up = {}
        self.down = {}

    def record(self, var, direction, degradation, frac):
        store = self.up if direction == "up" else self.down
        n, avg = store.get(var, (0, 0.0))
        unit = degradation / max(frac, 1e-9)
        store[var] = (n + 1, (avg * n + unit) / (n + 1))

    def score(self, var, frac):
        nu, au = self.up.get(var, (0, 0.0))
        nd, ad = self.down.get(var, (0, 0.0))
        if nu == 0 or nd == 0:
            return None
        up, down = au * (1.0 - frac), ad * frac
        return max(up, 1e-12) * max(down, 1e-12)


def solve_mip(model: ConicModel, params: MipParams = None) -> SolveResult:
    params = params or MipParams()
    t0 = time.monotonic()
    int_idx = sorted(model.integer)
    tol = params.tolerances

    if not int_idx:
        sol = solve_relaxation(model, tol)
        if sol.status == INFEASIBLE:
            return SolveResult("infeasible", np.inf, np.inf, 0.0, 1, time.monotonic() - t0)
        if sol.status != OPTIMAL:
            return SolveResult("limit", np.inf, -np.inf, np.inf, 1, time.monotonic() - t0)
        return SolveResult(
            "optimal", sol.primal_objective, sol.objective, 0.0, 1,
            time.monotonic() - t0, sol.primal,
        )

    incumbent_val = float("inf")
    incumbent_x = None
    pseudo = _PseudoCosts()
    nodes_explored = 0
    seq = 0
    heap = []  # (key, seq, bound, lower, upper, parent_info)

    def cutoff():
        if not np.isfinite(incumbent_val):
            return float("inf")
        return incumbent_val - params.mip_gap * max(1.0, abs(incumbent_val))

    def time_up():
        return (
            params.time_limit_seconds is not None
            and time.monotonic() - t0 > params.time_limit_seconds
        )

    def relax(lower, upper, parent_bound):
        sol = solve_relaxation(model.copy_with_bounds(lower, upper), tol)
        if sol.status == NUMERICAL_LIMIT:
            # bound unavailable; fall back to the box-only bound, keep the node
            sol = RelaxSolution(OPTIMAL, _box_bound(model, lower, upper))
            sol.primal = None
        if sol.status == OPTIMAL:
            sol.objective = max(sol.objective, parent_bound)
        return sol

    def try_incumbent(value, x):
        nonlocal incumbent_val, incumbent_x
        if value < incumbent_val - 1e-12:
            incumbent_val = value
            incumbent_x = np.array(x)

    def round_and_repair(sol_x, lower, upper):
        lo, up = list(lower), list(upper)
        for i in int_idx:
            v = round(min(max(sol_x[i], lower[i]), upper[i]))
            lo[i] = up[i] = float(v)
        s = solve_relaxation(model.copy_with_bounds(lo, up), tol)
        if s.status == OPTIMAL and s.max_residual <= 1e-6 * (1.0 + abs(s.primal_objective)):
            try_incumbent(s.primal_objective, s.primal)

    root_lo, root_up = list(model.lower), list(model.upper)
    root = relax(root_lo, root_up, -np.inf)
    if root.status == INFEASIBLE:
        return SolveResult("infeasible", np.inf, np.inf, 0.0, 1, time.monotonic() - t0)
    if root.status != OPTIMAL:
        return SolveResult("limit", np.inf, -np.inf, np.inf, 1, time.monotonic() - t0)
    heapq.heappush(heap, (root.objective, seq, root.objective, root_lo, root_up, root))
    seq += 1

    status = None
    global_bound = root.objective
    while heap:
        if params.node_order == "dfs":
            entry = max(heap, key=lambda e: e[1])
            heap.remove(entry)
            heapq.heapify(heap)
        else:
            entry = heapq.heappop(heap)
        _, _, node_bound, lower, upper, sol = entry
        global_bound = min([node_bound] + [e[2] for e in heap]) if heap else node_bound
        if _mip_gap_of(incumbent_val, min(node_bound, global_bound)) <= params.mip_gap:
            global_bound = min(node_bound, global_bound)
            status = "optimal"
            break
        if node_bound >= cutoff():
            continue
        nodes_explored += 1
        if nodes_explored > params.node_limit or time_up():
            status = "limit"
            break
        if sol.primal is None:  # box-bound fallback node: solve here
            sol = relax(lower, upper, node_bound)
            if sol.status == INFEASIBLE:
                continue
            node_bound = sol.objective
            if sol.primal is None:
                # still no usable relaxation: split the first open integer box
                open_vars = [i for i in int_idx if lower[i] < upper[i]]
                if not open_vars:
                    continue
                var = open_vars[0]
                mid = math.floor((lower[var] + upper[var]) / 2.0)
                for blo, bup in ((lower[var], mid), (mid + 1, upper[var])):
                    lo, up = list(lower), list(upper)
                    lo[var], up[var] = float(blo), float(bup)
                    if lo[var] <= up[var]:
                        stub = RelaxSolution(OPTIMAL, node_bound)
                        stub.primal = None
                        heapq.heappush(heap, (node_bound, seq, node_bound, lo, up, stub))
                        seq += 1
                continue
        fracs = _fractional(sol.primal, int_idx, lower, upper, params.int_tol)
        if not fracs:
            try_incumbent(sol.primal_objective, sol.primal)
            continue
        if nodes_explored % _HEUR_PERIOD == 1:
            round_and_repair(sol.primal, lower, upper)
        var, val, frac = _pick_branch(fracs, params.branching, pseudo)
        for direction, (blo, bup) in (
            ("down", (lower[var], math.floor(val))),
            ("up", (math.ceil(val), upper[var])),
        ):
            lo, up = list(lower), list(upper)
            lo[var], up[var] = float(blo), float(bup)
            if lo[var] > up[var]:
                continue
            child = relax(lo, up, node_bound)
            if child.status == INFEASIBLE:
                pseudo.record(var, direction, max(incumbent_val - node_bound, 1.0),
                              frac if direction == "down" else 1.0 - frac)
                continue
            pseudo.record(var, direction, max(child.objective - node_bound, 0.0),
                          frac if direction == "down" else 1.0 - frac)
            if child.objective < cutoff():
                heapq.heappush(heap, (child.objective, seq, child.objective, lo, up, child))
            seq += 1

    if status is None:
        status = "optimal" if np.isfinite(incumbent_val) else "infeasible"
        global_bound = incumbent_val
    if status == "optimal" and np.isfinite(incumbent_val):
        global_bound = min(global_bound, incumbent_val)
    if status == "limit" and heap:
        global_bound = min(e[2] for e in heap)
    gap = _mip_gap_of(incumbent_val, global_bound)
    if status == "limit" and np.isfinite(incumbent_val):
        status = "feasible"
    return SolveResult(
        status=status,
        incumbent_value=incumbent_val,
        bound=global_bound,
        gap=gap,
        nodes_explored=max(nodes_explored, 1),
        wall_seconds=time.monotonic() - t0,
        incumbent=incumbent_x,
    )


def _pick_branch(fracs, branching, pseudo):
    if branching == "pseudo_cost":
        best = None
        for i, v, f in fracs:
            frac = v - math.floor(v)
            s = pseudo.score(i, frac)
            if s is not None and (best is None or s > best[0] + 1e-15):
                best = (s, i, v, frac)
        if best is not None:
            return best[1], best[2], best[3]
    # most fractional, lowest index on ties
    best = max(fracs, key=lambda e: (min(e[2], 1.0 - e[2]), -e[0]))
    i, v, _ = best
    return i, v, v - math.floor(v)


def add_symmetry_cuts(model: ConicModel, spec: ProblemSpec, keys=None) -> ConicModel:
    """Append member-ordering rows y_i >= y_{i+1} per class (per-copy models).

    The ordering key is one binary coordinate per class: by default
    coordinate 0 (the single binary for separable problems; builders place
    the natural key first for multi-binary members).
    """
    tag0 = "c0.m0.y0"
    if tag0 not in model.provenance:
        raise ValueError("no per-copy binaries found; symmetry cuts need a per-copy model")
    out = ConicModel(
        name=model.name + ":sym",
        lower=list(model.lower),
        upper=list(model.upper),
        rows=list(model.rows),
        cones=list(model.cones),
        integer=list(model.integer),
        objective=dict(model.objective),
        obj_const=model.obj_const,
        provenance=list(model.provenance),
    )
    index = {t: i for i, t in enumerate(model.provenance)}
    for t, cls in enumerate(spec.classes):
        key = 0 if keys is None else keys[t]
        for i in range(cls.multiplicity - 1):
            a = index[f"c{t}.m{i}.y{key}"]
            b = index[f"c{t}.m{i + 1}.y{key}"]
            out.add_row([(a, -1.0), (b, 1.0)], LE, 0.0)
    return out
