"""Continuous relaxation solver for linear + rotated-cone models.

Backed by Clarabel (interior-point, deterministic for fixed input).
Rotated cones are mapped to standard second-order cones via
``||(u - v, 2z)|| <= u + v``. Reported objectives are safe lower bounds:
the final dual iterate is projected into the dual cone and its objective
is reduced by a residual margin computed from the variable boxes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import clarabel
import numpy as np
from scipy import sparse

from .conic_model import EQ, LE, ConicModel

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_LIMIT = "numerical_limit"

_STATUS_MAP = {
    "Solved": OPTIMAL,
    "AlmostSolved": OPTIMAL,
    "PrimalInfeasible": INFEASIBLE,
    "AlmostPrimalInfeasible": INFEASIBLE,
    "DualInfeasible": UNBOUNDED,
    "AlmostDualInfeasible": UNBOUNDED,
}


@dataclass(frozen=True)
class SolverTolerances:
    feas: float = 1e-8
    gap_abs: float = 1e-8
    gap_rel: float = 1e-8
    step_min: float = 1e-14
    max_iters: int = 200


@dataclass
class RelaxSolution:
    status: str
    objective: float  # safe lower bound on the true optimum
    primal: np.ndarray = None
    primal_objective: float = float("nan")
    dual_gap: float = float("nan")
    max_residual: float = float("nan")
    iterations: int = 0


@dataclass
class ResidualReport:
    box: float = 0.0
    linear: float = 0.0
    cone: float = 0.0

    @property
    def max(self) -> float:
        return max(self.box, self.linear, self.cone)


def certify(model: ConicModel, solution) -> ResidualReport:
    """Recompute every box/row/cone violation at a primal point."""
    x = solution.primal if isinstance(solution, RelaxSolution) else np.asarray(solution, float)
    rep = ResidualReport()
    if x is None or model.num_vars == 0:
        return rep
    for i in range(model.num_vars):
        if np.isfinite(model.lower[i]):
            rep.box = max(rep.box, model.lower[i] - x[i])
        if np.isfinite(model.upper[i]):
            rep.box = max(rep.box, x[i] - model.upper[i])
    for row in model.rows:
        act = row.activity(x)
        if row.sense == EQ:
            rep.linear = max(rep.linear, abs(act - row.rhs))
        else:
            rep.linear = max(rep.linear, act - row.rhs)
    for cone in model.cones:
        u, v = x[cone[0]], x[cone[1]]
        zz = sum(x[i] * x[i] for i in cone[2:])
        rep.cone = max(rep.cone, zz - u * v, -u, -v)
    rep.box = max(rep.box, 0.0)
    rep.linear = max(rep.linear, 0.0)
    rep.cone = max(rep.cone, 0.0)
    return rep


def _assemble(model: ConicModel):
    """Stack constraints as clarabel blocks: zero, nonneg, then SOC per cone."""
    n = model.num_vars
    tri = {"rows": [], "cols": [], "vals": []}

    def put(r, c, v):
        if v != 0.0:
            tri["rows"].append(r)
            tri["cols"].append(c)
            tri["vals"].append(v)

    b = []
    cones = []
    r = 0
    eq_rows = [row for row in model.rows if row.sense == EQ]
    le_rows = [row for row in model.rows if row.sense == LE]
    for row in eq_rows:
        for i, c in row.coeffs:
            put(r, i, c)
        b.append(row.rhs)
        r += 1
    if eq_rows:
        cones.append(clarabel.ZeroConeT(len(eq_rows)))
    nneg = 0
    for row in le_rows:
        for i, c in row.coeffs:
            put(r, i, c)
        b.append(row.rhs)
        r += 1
        nneg += 1
    for i in range(n):
        if np.isfinite(model.upper[i]):
            put(r, i, 1.0)
            b.append(model.upper[i])
            r += 1
            nneg += 1
        if np.isfinite(model.lower[i]):
            put(r, i, -1.0)
            b.append(-model.lower[i])
            r += 1
            nneg += 1
    if nneg:
        cones.append(clarabel.NonnegativeConeT(nneg))
    for cone in model.cones:
        u, v, zs = cone[0], cone[1], cone[2:]
        # s = [u + v, u - v, 2 z...] in SOC  <=>  sum z^2 <= u v, u,v >= 0
        put(r, u, -1.0)
        put(r, v, -1.0)
        b.append(0.0)
        r += 1
        put(r, u, -1.0)
        put(r, v, 1.0)
        b.append(0.0)
        r += 1
        for z in zs:
            put(r, z, -2.0)
            b.append(0.0)
            r += 1
        cones.append(clarabel.SecondOrderConeT(2 + len(zs)))
    A = sparse.csc_matrix(
        (tri["vals"], (tri["rows"], tri["cols"])), shape=(r, n), dtype=float
    )
    return A, np.array(b, dtype=float), cones


def _project_dual(z: np.ndarray, model: ConicModel, n_eq: int, n_nneg: int) -> np.ndarray:
    z = z.copy()
    r = n_eq
    z[r : r + n_nneg] = np.maximum(z[r : r + n_nneg], 0.0)
    r += n_nneg
    for cone in model.cones:
        d = len(cone)  # members (u, v, z...) map to an SOC block of the same dim
        blk = z[r : r + d]
        t, w = blk[0], blk[1:]
        nw = float(np.linalg.norm(w))
        if nw <= t:
            pass
        elif nw <= -t:
            blk[:] = 0.0
        else:
            a = 0.5 * (1.0 + t / nw)
            blk[0] = a * nw
            blk[1:] = a * w
        z[r : r + d] = blk
        r += d
    return z


def solve_relaxation(model: ConicModel, tol: SolverTolerances = None) -> RelaxSolution:
    """Solve the continuous relaxation (integrality marks ignored)."""
    tol = tol or SolverTolerances()
    n = model.num_vars
    if n == 0:
        return RelaxSolution(OPTIMAL, model.obj_const, np.zeros(0), model.obj_const, 0.0, 0.0)
    q = np.zeros(n)
    for i, c in model.objective.items():
        q[i] += c
    A, b, cones = _assemble(model)
    if A.shape[0] == 0:
        if np.all(q == 0.0):
            return RelaxSolution(OPTIMAL, model.obj_const, np.zeros(n), model.obj_const, 0.0, 0.0)
        return RelaxSolution(UNBOUNDED, -np.inf)
    P = sparse.csc_matrix((n, n))
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_feas = tol.feas
    settings.tol_gap_abs = tol.gap_abs
    settings.tol_gap_rel = tol.gap_rel
    settings.min_terminate_step_length = tol.step_min
    settings.max_iter = tol.max_iters
    solver = clarabel.DefaultSolver(P, q, A, b, cones, settings)
    sol = solver.solve()
    status = _STATUS_MAP.get(str(sol.status), NUMERICAL_LIMIT)
    if status == INFEASIBLE:
        return RelaxSolution(INFEASIBLE, np.inf, iterations=sol.iterations)
    if status == UNBOUNDED:
        return RelaxSolution(UNBOUNDED, -np.inf, iterations=sol.iterations)
    if status == NUMERICAL_LIMIT:
        return RelaxSolution(NUMERICAL_LIMIT, -np.inf, iterations=sol.iterations)

    x = np.asarray(sol.x, dtype=float)
    primal_obj = float(q @ x) + model.obj_const
    n_eq = sum(1 for row in model.rows if row.sense == EQ)
    n_nneg = A.shape[0] - n_eq - sum(len(c) for c in model.cones)
    z = _project_dual(np.asarray(sol.z, dtype=float), model, n_eq, n_nneg)
    dual_obj = float(-b @ z) + model.obj_const
    resid = q + A.T @ z
    box_mag = np.array(
        [max(abs(model.lower[i]), abs(model.upper[i])) for i in range(n)]
    )
    if np.all(np.isfinite(box_mag)):
        margin = float(np.abs(resid) @ box_mag)
        bound = dual_obj - margin
    else:
        # fallback for models with unbounded variables: gap-based margin
        bound = primal_obj - (tol.gap_abs + tol.gap_rel * abs(primal_obj))
    rep = certify(model, x)
    return RelaxSolution(
        status=OPTIMAL,
        objective=bound,
        primal=x,
        primal_objective=primal_obj,
        dual_gap=primal_obj - bound,
        max_residual=rep.max,
        iterations=sol.iterations,
    )
