"""Brute-force reference checks for the reformulation theory at tiny scale.

Everything here rebuilds constraint systems from the raw set data instead of
reusing the formulation compilers, so a bug in a compiler cannot hide from
the checks that are supposed to catch it. Only the relaxation solver is
shared infrastructure.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .conic_model import EQ, LE, ConicModel
from .problem import SENSE_EQ, OmegaSpec, ProblemSpec
from .quadratics import BlockSet, ConvexQuadratic
from .solver import INFEASIBLE, OPTIMAL, SolverTolerances, solve_relaxation

ENUM_BUDGET = 2**20


def _encode_row(model: ConicModel, func: ConvexQuadratic, rhs: float, xs, scale=None,
                margin=None, tag: str = "r") -> None:
    """h(x) <= rhs (optionally scaled by a variable, plus a slack margin).

    Written independently of the compiler's encoder on purpose.
    """
    one = model.fixed_one()
    t = one if scale is None else scale
    lin_terms = [(xs[j], func.lin[j]) for j in range(func.dim)]
    if not np.any(func.quad > 0.0):
        row = lin_terms + [(t, -(rhs - func.const_term))]
        if margin is not None:
            row.append((margin, 1.0))
        model.add_row(row, LE, 0.0)
        return
    vexpr = [(t, rhs - func.const_term)] + [(i, -c) for i, c in lin_terms]
    if margin is not None:
        vexpr.append((margin, -1.0))
    hi = sum(max(c * model.lower[i], c * model.upper[i]) for i, c in vexpr)
    v = model.add_var(0.0, max(hi, 0.0), tag=f"{tag}.v")
    model.add_row([(v, 1.0)] + [(i, -c) for i, c in vexpr], EQ, 0.0)
    zs = []
    for j in range(func.dim):
        if func.quad[j] > 0.0:
            r = float(np.sqrt(func.quad[j]))
            lo, hi = sorted((r * model.lower[xs[j]], r * model.upper[xs[j]]))
            z = model.add_var(lo, hi, tag=f"{tag}.z{j}")
            model.add_row([(z, 1.0), (xs[j], -r)], EQ, 0.0)
            zs.append(z)
    model.add_rsoc(t, v, zs)


def _feasible_assignments(omega: OmegaSpec):
    return [tuple(int(v) for v in y) for y in omega.enumerate_binary()]


def brute_optimum(spec: ProblemSpec, tol: SolverTolerances = None) -> float:
    """Minimum over all integer indicator assignments, by enumeration.

    Members of one class are interchangeable, so assignments are enumerated
    as multisets per class (combinations with replacement), which also keeps
    the enumeration within budget on symmetric instances.
    """
    tol = tol or SolverTolerances()
    per_class = []
    total = 1
    for cls in spec.classes:
        feas = _feasible_assignments(cls.omega)
        if not feas:
            return float("inf")
        combos = list(itertools.combinations_with_replacement(feas, cls.multiplicity))
        total *= len(combos)
        if total > ENUM_BUDGET:
            raise ValueError("enumeration budget exceeded")
        per_class.append(combos)
    best = float("inf")
    for choice in itertools.product(*per_class):
        val = _restriction_value(spec, choice, tol)
        best = min(best, val)
    return best


def _restriction_value(spec: ProblemSpec, choice, tol) -> float:
    """Continuous optimum with every indicator fixed; +inf if infeasible."""
    model = ConicModel(name="restriction")
    const = 0.0
    member_x = []
    for t, cls in enumerate(spec.classes):
        omega = cls.omega
        for i, y in enumerate(choice[t]):
            const += float(np.dot(cls.obj_y, y))
            blocks_x = []
            for s, (on, off) in enumerate(omega.blocks):
                bs = on if y[s] == 1 else off
                xs = [
                    model.add_var(bs.lower[j], bs.upper[j], tag=f"c{t}.m{i}.b{s}.x{j}")
                    for j in range(bs.dim)
                ]
                for func, rhs in bs.rows:
                    _encode_row(model, func, rhs, xs, tag=f"c{t}.m{i}.b{s}")
                for j, x in enumerate(xs):
                    model.add_objective(x, cls.obj[s][j])
                blocks_x.append(xs)
            member_x.append((t, blocks_x))
    for l, (sense, rhs) in enumerate(spec.global_rows):
        coeffs = []
        for t, blocks_x in member_x:
            vecs = spec.classes[t].coupling_coeffs[l]
            for s, xs in enumerate(blocks_x):
                coeffs.extend((x, vecs[s][j]) for j, x in enumerate(xs))
        model.add_row(coeffs, EQ if sense == SENSE_EQ else LE, rhs)
    sol = solve_relaxation(model, tol)
    if sol.status == INFEASIBLE:
        return float("inf")
    if sol.status != OPTIMAL:
        return float("inf")
    return float(sol.primal_objective) + const


# -- Slater margin ----------------------------------------------------------


def check_slater(omega: OmegaSpec) -> float:
    """Best uniform slack over the per-copy relaxation rows; > 0 certifies
    an interior point (Assumption 1); 0 is indeterminate."""
    model = ConicModel(name="slater")
    scale = max(1.0, max(
        (max(abs(bs.lower).max(initial=0.0), abs(bs.upper).max(initial=0.0))
         for on, off in omega.blocks for bs in (on, off)),
        default=1.0,
    ))
    mu = model.add_var(0.0, scale, tag="margin")
    ys = [model.add_var(0.0, 1.0, tag=f"y{s}") for s in range(omega.k)]
    for s in range(omega.k):
        model.add_row([(mu, 1.0), (ys[s], -1.0)], LE, 0.0)
        model.add_row([(mu, 1.0), (ys[s], 1.0)], LE, 1.0)
    for a, b, sense in zip(omega.coupling_A, omega.coupling_b, omega.coupling_senses):
        coeffs = [(ys[s], a[s]) for s in range(omega.k)]
        if sense == SENSE_EQ:
            model.add_row(coeffs, EQ, b)
        else:
            model.add_row(coeffs + [(mu, 1.0)], LE, b)
    for s, (on, off) in enumerate(omega.blocks):
        sides = [(on, ys[s], False)]
        if not off.is_zero_singleton:
            ybar = model.add_var(0.0, 1.0, tag=f"ybar{s}")
            model.add_row([(ys[s], 1.0), (ybar, 1.0)], EQ, 1.0)
            sides.append((off, ybar, True))
        for bs, t, is_off in sides:
            xs = [
                model.add_var(min(0.0, bs.lower[j]), max(0.0, bs.upper[j]), tag=f"b{s}.x{j}")
                for j in range(bs.dim)
            ]
            for j, x in enumerate(xs):
                model.add_row([(x, 1.0), (t, -bs.upper[j]), (mu, 1.0)], LE, 0.0)
                model.add_row([(x, -1.0), (t, bs.lower[j]), (mu, 1.0)], LE, 0.0)
            for func, rhs in bs.rows:
                _encode_row(model, func, rhs, xs, scale=t, margin=mu, tag=f"b{s}")
    model.add_objective(mu, -1.0)
    sol = solve_relaxation(model, SolverTolerances())
    if sol.status != OPTIMAL:
        return 0.0
    return max(0.0, float(-sol.primal_objective))


# -- hull equivalence ------------------------------------------------------


@dataclass
class HullReport:
    verdict: str  # PASS | FAIL | SKIPPED
    margin: float
    worst_rel: float = 0.0
    worst_direction: list = None
    details: list = field(default_factory=list)


def _block_min(bs: BlockSet, direction) -> float:
    """min direction.x over one convex block (independent restriction)."""
    if bs.is_zero_singleton:
        return 0.0
    model = ConicModel(name="blockmin")
    xs = [model.add_var(bs.lower[j], bs.upper[j], tag=f"x{j}") for j in range(bs.dim)]
    for func, rhs in bs.rows:
        _encode_row(model, func, rhs, xs)
    for j, x in enumerate(xs):
        model.add_objective(x, direction[j])
    sol = solve_relaxation(model, SolverTolerances())
    if sol.status != OPTIMAL:
        return float("inf")
    return float(sol.primal_objective)


def _omega_min(omega: OmegaSpec, dir_x, dir_y) -> float:
    """min over Omega of dir_x.x + dir_y.y, by binary enumeration."""
    best = float("inf")
    for y in omega.enumerate_binary():
        val = float(np.dot(dir_y, y))
        for s, (on, off) in enumerate(omega.blocks):
            val += _block_min(on if y[s] == 1 else off, dir_x[s])
        best = min(best, val)
    return best


def check_hull_equiv(omega: OmegaSpec, r: int, n_dirs: int = 20, seed: int = 0,
                     rel_tol: float = 1e-6) -> HullReport:
    """Check that the aggregated relaxation optimum equals the optimum
    over the convex hull of the r-fold sum, direction by direction.

    A linear direction splits over a Minkowski sum, so the hull side is r
    times the enumerated minimum over a single copy.
    """
    margin = check_slater(omega)
    if margin <= 1e-6:
        return HullReport(verdict="SKIPPED", margin=margin)
    from .aggregation import aggregate_class

    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_dir = None
    details = []
    for d in range(n_dirs):
        dir_x = [rng.standard_normal(on.dim) for on, _ in omega.blocks]
        dir_y = rng.standard_normal(omega.k)
        hull_val = r * _omega_min(omega, dir_x, dir_y)
        model = ConicModel(name="aggrelax")
        agg = aggregate_class(omega, r, model, integer=False)
        for s in range(omega.k):
            model.add_objective(agg.y_vars[s], float(dir_y[s]))
        for s, xs in enumerate(agg.x_vars):
            for j, x in enumerate(xs):
                model.add_objective(x, float(dir_x[s][j]))
        sol = solve_relaxation(model, SolverTolerances())
        agg_val = float(sol.primal_objective) if sol.status == OPTIMAL else float("inf")
        rel = abs(agg_val - hull_val) / (1.0 + abs(hull_val))
        details.append({"direction": d, "hull": hull_val, "agg": agg_val, "rel": rel})
        if rel > worst:
            worst = rel
            worst_dir = [list(map(float, v)) for v in dir_x] + [list(map(float, dir_y))]
    verdict = "PASS" if worst <= rel_tol else "FAIL"
    return HullReport(verdict=verdict, margin=margin, worst_rel=worst,
                      worst_direction=worst_dir, details=details)


# -- lower-bound ordering --------------------------------------------------


def check_lb_order(spec: ProblemSpec, tol_rel: float = 1e-6):
    from .aggregation import compile_agg
    from .perspective import compile_p0, compile_per

    bounds = {}
    for name, comp in (("p0", compile_p0), ("per", compile_per), ("agg", compile_agg)):
        sol = solve_relaxation(comp(spec, mode="relaxed"), SolverTolerances())
        if sol.status != OPTIMAL:
            return (float("nan"), float("nan"), float("nan"), "INCONCLUSIVE")
        bounds[name] = float(sol.primal_objective)
    lb_p0, lb_per, lb_agg = bounds["p0"], bounds["per"], bounds["agg"]
    ok = abs(lb_agg - lb_per) <= tol_rel * (1.0 + abs(lb_per))
    ok = ok and lb_per >= lb_p0 - tol_rel * (1.0 + abs(lb_p0))
    return (lb_p0, lb_per, lb_agg, "PASS" if ok else "FAIL")


# -- total unimodularity ----------------------------------------------------


def check_tu_small(A) -> bool:
    """Exhaustive submatrix determinants; entries must already be integers."""
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    if m > 8 or n > 8:
        raise ValueError("matrix too large for exhaustive check")
    if not np.allclose(A, np.round(A)):
        return False
    A = np.round(A).astype(int)
    for k in range(1, min(m, n) + 1):
        for rows in itertools.combinations(range(m), k):
            sub_rows = A[list(rows), :]
            for cols in itertools.combinations(range(n), k):
                det = round(float(np.linalg.det(sub_rows[:, list(cols)])))
                if det not in (-1, 0, 1):
                    return False
    return True


# -- random small instances for the hull suite -----------------------------

_TU_MENU = {
    1: [np.array([[1.0], [-1.0]])],
    2: [
        np.array([[1.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]),
        np.array([[1.0, -1.0], [-1.0, 1.0], [-1.0, 0.0]]),
        np.array([[1.0, 0.0], [0.0, 1.0]]),
    ],
    3: [
        np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0], [-1.0, 0.0, 0.0]]),
        np.array([[1.0, 1.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]]),
    ],
}


def _random_blockset(rng, dim: int, allow_zero: bool) -> BlockSet:
    if allow_zero and rng.random() < 0.6:
        return BlockSet.zero(dim)
    lo = rng.uniform(-2.0, 0.5, size=dim)
    hi = lo + rng.uniform(0.5, 2.5, size=dim)
    center = (lo + hi) / 2.0
    rows = []
    for _ in range(rng.integers(1, 3)):
        quad = np.where(rng.random(dim) < 0.7, rng.uniform(0.0, 2.0, size=dim), 0.0)
        lin = rng.uniform(-1.5, 1.5, size=dim)
        f = ConvexQuadratic(dim, quad, lin)
        rows.append((f, f.value(center) + rng.uniform(0.5, 2.0)))
    return BlockSet(dim, tuple(rows), lo, hi)


def gen_random_omega(seed: int, max_attempts: int = 50) -> OmegaSpec:
    """Random small structured set with verified TU coupling and a Slater
    margin above 1e-6 (draws failing the margin are rejected)."""
    for attempt in range(max_attempts):
        rng = np.random.default_rng([seed, attempt])
        k = int(rng.integers(1, 4))
        A = _TU_MENU[k][rng.integers(len(_TU_MENU[k]))]
        if not check_tu_small(A):
            raise AssertionError("menu matrix is not totally unimodular")
        b = np.where(A.sum(axis=1) > 0, 1.0, 0.0) + rng.integers(0, 2, size=A.shape[0])
        blocks = []
        for _ in range(k):
            dim = int(rng.integers(1, 4))
            on = _random_blockset(rng, dim, allow_zero=False)
            off = _random_blockset(rng, dim, allow_zero=True)
            blocks.append((on, off))
        omega = OmegaSpec(
            blocks=tuple(blocks), coupling_A=A, coupling_b=b, tu_asserted=True
        )
        if not list(omega.enumerate_binary()):
            continue
        if check_slater(omega) > 1e-6:
            return omega
    raise RuntimeError("could not draw a qualifying random set")


def report_json(reports: dict) -> bytes:
    def default(o):
        if isinstance(o, HullReport):
            return o.__dict__
        if isinstance(o, (np.floating, np.integer)):
            return float(o)
        raise TypeError(type(o).__name__)

    return (json.dumps(reports, indent=1, default=default) + "\n").encode("ascii")
