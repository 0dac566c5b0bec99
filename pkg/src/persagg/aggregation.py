"""Aggregated reformulation: one variable bundle per equivalence class.

Per-copy variables of the ``r`` identical members collapse to their sums.
The on-side perspective rows are scaled by the integer count Y in [0, r],
the off-side rows by r - Y, and the coupling polytope right-hand side is
scaled by r.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .conic_model import EQ, LE, ConicModel
from .perspective import PerspectiveRow, _box_vars, _scaled_box, soc_encode
from .problem import SENSE_EQ, SENSE_LE, OmegaSpec, ProblemSpec
from .quadratics import BlockSet
from .solver import OPTIMAL, SolverTolerances, solve_relaxation

_SENSE = {SENSE_LE: LE, SENSE_EQ: EQ}


@dataclass
class AggregatedClassModel:
    r: int
    y_vars: list = field(default_factory=list)
    x_vars: list = field(default_factory=list)  # per block: list of X indices
    w_vars: list = field(default_factory=list)
    z_vars: list = field(default_factory=list)  # None where the off-set is {0}


def _scaled_box_vars(model, bs: BlockSet, r: float, tag: str):
    return [
        model.add_var(min(0.0, r * bs.lower[j]), max(0.0, r * bs.upper[j]), tag=f"{tag}{j}")
        for j in range(bs.dim)
    ]


def aggregate_class(
    omega: OmegaSpec,
    r: int,
    builder: ConicModel,
    integer: bool = False,
    tag: str = "c0",
) -> AggregatedClassModel:
    """Append the aggregated constraint system for one class of size r."""
    if r < 0:
        raise ValueError("r must be a nonnegative integer")
    agg = AggregatedClassModel(r=r)
    if r == 0:
        # zero-copy aggregate: everything pinned to the origin
        agg.y_vars = [builder.add_var(0.0, 0.0, tag=f"{tag}.Y{s}") for s in range(omega.k)]
        for s, (on, _) in enumerate(omega.blocks):
            xs = [builder.add_var(0.0, 0.0, tag=f"{tag}.b{s}.X{j}") for j in range(on.dim)]
            agg.x_vars.append(xs)
            agg.w_vars.append(xs)
            agg.z_vars.append(None)
        return agg
    ys = [
        builder.add_var(0.0, float(r), integer=integer, tag=f"{tag}.Y{s}")
        for s in range(omega.k)
    ]
    agg.y_vars = ys
    for a, b, sense in zip(omega.coupling_A, omega.coupling_b, omega.coupling_senses):
        builder.add_row([(ys[s], a[s]) for s in range(omega.k)], _SENSE[sense], r * b)
    ybars = {}

    def ybar(s):
        if s not in ybars:
            yb = builder.add_var(0.0, float(r), tag=f"{tag}.Ybar{s}")
            builder.add_row([(ys[s], 1.0), (yb, 1.0)], EQ, float(r))
            ybars[s] = yb
        return ybars[s]

    for s, (on, off) in enumerate(omega.blocks):
        btag = f"{tag}.b{s}"
        ws = _scaled_box_vars(builder, on, float(r), f"{btag}.W")
        _scaled_box(builder, ws, ys[s], on.lower, on.upper)
        for func, rhs in on.rows:
            soc_encode(PerspectiveRow(func, ys[s], ws, rhs), builder, tag=f"{btag}.on")
        agg.w_vars.append(ws)
        if off.is_zero_singleton:
            agg.x_vars.append(ws)
            agg.z_vars.append(None)
            continue
        yb = ybar(s)
        zs = _scaled_box_vars(builder, off, float(r), f"{btag}.Z")
        _scaled_box(builder, zs, yb, off.lower, off.upper)
        for func, rhs in off.rows:
            soc_encode(PerspectiveRow(func, yb, zs, rhs), builder, tag=f"{btag}.off")
        agg.z_vars.append(zs)
        xs = []
        for j in range(on.dim):
            lo = builder.lower[ws[j]] + builder.lower[zs[j]]
            hi = builder.upper[ws[j]] + builder.upper[zs[j]]
            x = builder.add_var(lo, hi, tag=f"{btag}.X{j}")
            builder.add_row([(x, 1.0), (ws[j], -1.0), (zs[j], -1.0)], EQ, 0.0)
            xs.append(x)
        agg.x_vars.append(xs)
    return agg


def compile_agg(spec: ProblemSpec, mode: str = "integer") -> ConicModel:
    """Aggregated reformulation with r = N_t per class."""
    if mode not in ("integer", "relaxed"):
        raise ValueError("mode must be 'integer' or 'relaxed'")
    model = ConicModel(name=f"{spec.name}:agg:{mode}")
    aggs = []
    for t, cls in enumerate(spec.classes):
        agg = aggregate_class(
            cls.omega, cls.multiplicity, model, integer=(mode == "integer"), tag=f"c{t}"
        )
        aggs.append(agg)
        for s in range(cls.omega.k):
            model.add_objective(agg.y_vars[s], cls.obj_y[s])
        for s, xs in enumerate(agg.x_vars):
            for j, x in enumerate(xs):
                model.add_objective(x, cls.obj[s][j])
    for l, (sense, rhs) in enumerate(spec.global_rows):
        coeffs = []
        for t, cls in enumerate(spec.classes):
            for s, xs in enumerate(aggs[t].x_vars):
                vec = cls.coupling_coeffs[l][s]
                coeffs.extend((x, vec[j]) for j, x in enumerate(xs))
        model.add_row(coeffs, _SENSE[sense], rhs)
    return model


def support_scaled_set(F: BlockSet, r: float, direction) -> float:
    """max over r*F of direction.x, via one convex solve over F."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    if r == 0.0:
        return 0.0
    direction = np.asarray(direction, dtype=float)
    model = ConicModel(name="support")
    xs = [model.add_var(F.lower[j], F.upper[j], tag=f"x{j}") for j in range(F.dim)]
    one = model.fixed_one()
    for func, rhs in F.rows:
        soc_encode(PerspectiveRow(func, one, xs, rhs), model, tag="row")
    for j, x in enumerate(xs):
        model.add_objective(x, -direction[j])
    sol = solve_relaxation(model, SolverTolerances())
    if sol.status != OPTIMAL:
        raise RuntimeError(f"support solve failed: {sol.status}")
    return float(r * -sol.primal_objective)


def structural_class_signature(omega: OmegaSpec) -> str:
    """Hash-friendly signature for detecting accidentally identical classes."""
    parts = []
    for on, off in omega.blocks:
        for bs in (on, off):
            parts.append("B" + ",".join(format(v, ".17g") for v in np.concatenate([bs.lower, bs.upper])))
            for f, rhs in bs.rows:
                parts.append(
                    "R"
                    + ",".join(format(v, ".17g") for v in np.concatenate([f.quad, f.lin, [f.const_term, rhs]]))
                )
    parts.append("A" + ",".join(format(v, ".17g") for v in omega.coupling_A.ravel()))
    parts.append("b" + ",".join(format(v, ".17g") for v in omega.coupling_b))
    return "|".join(parts)
