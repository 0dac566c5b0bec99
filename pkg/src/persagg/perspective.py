"""Perspective-function evaluation and cone compilation of formulations.

``compile_per`` is the exact per-copy reformulation: each on/off row is
scaled by its indicator through a rotated cone. ``compile_p0`` is the weak
baseline: rows stay unscaled (rhs interpolated linearly in the indicator so
both integer endpoints remain exact) and only the variable boxes are scaled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conic_model import EQ, LE, ConicModel
from .problem import SENSE_EQ, SENSE_LE, ProblemSpec
from .quadratics import BlockSet, ConvexQuadratic

_SENSE = {SENSE_LE: LE, SENSE_EQ: EQ}


def perspective_value(
    f: ConvexQuadratic, x, t: float, domain: BlockSet, tol: float = 1e-9
) -> float:
    """t * f(x/t) extended by closure; +inf outside the graph.

    The domain is bounded, so the recession cone is {0} and the closure at
    t = 0 is finite only at x = 0.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    x = np.asarray(x, dtype=float)
    if t == 0.0:
        return 0.0 if np.all(np.abs(x) <= tol) else float("inf")
    xi = x / t
    if not domain.contains(xi, tol=tol):
        return float("inf")
    return t * f.value(xi)


@dataclass(frozen=True)
class PerspectiveRow:
    """h(x) <= rhs scaled by the indicator variable ``scale_var``."""

    base: ConvexQuadratic
    scale_var: int
    vars: tuple
    rhs: float

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(int(i) for i in self.vars))
        if len(self.vars) != self.base.dim:
            raise ValueError("vars length must equal base dim")


def _interval(model, coeffs):
    """Interval-arithmetic range of a linear expression over variable boxes."""
    lo = hi = 0.0
    for i, c in coeffs:
        a, b = c * model.lower[i], c * model.upper[i]
        lo += min(a, b)
        hi += max(a, b)
    return lo, hi


def soc_encode(row: PerspectiveRow, model: ConicModel, tag: str = "p") -> None:
    """Append the conic encoding of ``t * h(x/t) <= rhs * t``.

    For h(x) = sum q_j x_j^2 + b.x + c this is the rotated cone
    sum (sqrt(q_j) x_j)^2 <= t * v with v = (rhs - c) t - b.x. Rows with no
    curvature compile to a single linear row.
    """
    f, t, xs, d = row.base, row.scale_var, row.vars, row.rhs
    if f.is_linear:
        model.add_row(
            [(xs[j], f.lin[j]) for j in range(f.dim)] + [(t, -(d - f.const_term))],
            LE,
            0.0,
        )
        return
    vexpr = [(t, d - f.const_term)] + [(xs[j], -f.lin[j]) for j in range(f.dim)]
    vlo, vhi = _interval(model, vexpr)
    v = model.add_var(0.0, max(vhi, 0.0), tag=f"{tag}.v")
    model.add_row([(v, 1.0)] + [(i, -c) for i, c in vexpr], EQ, 0.0)
    zs = []
    for j in range(f.dim):
        if f.quad[j] > 0.0:
            r = float(np.sqrt(f.quad[j]))
            zlo, zhi = _interval(model, [(xs[j], r)])
            z = model.add_var(zlo, zhi, tag=f"{tag}.zc{j}")
            model.add_row([(z, 1.0), (xs[j], -r)], EQ, 0.0)
            zs.append(z)
    model.add_rsoc(t, v, zs)


def _scaled_box(model, xs, scale, lower, upper):
    """Rows lower * t <= x <= upper * t, one pair per coordinate."""
    for j, x in enumerate(xs):
        model.add_row([(x, 1.0), (scale, -upper[j])], LE, 0.0)
        model.add_row([(x, -1.0), (scale, lower[j])], LE, 0.0)


def _box_vars(model, bs: BlockSet, tag: str):
    """Variables covering the union of the scaled box and the origin."""
    return [
        model.add_var(min(0.0, bs.lower[j]), max(0.0, bs.upper[j]), tag=f"{tag}{j}")
        for j in range(bs.dim)
    ]


def _coupling_rows(model, omega, ys, scale_rhs: float = 1.0):
    for a, b, sense in zip(omega.coupling_A, omega.coupling_b, omega.coupling_senses):
        model.add_row(
            [(ys[s], a[s]) for s in range(omega.k)], _SENSE[sense], b * scale_rhs
        )


def _encode_p0_rows(model, func, rhs, xs, y, off_const: float, tag: str):
    """Unscaled row with linearly interpolated rhs: h(x) <= rhs + slack*(1-y)."""
    slack = max(0.0, off_const - rhs)
    if func.is_linear:
        model.add_row(
            [(xs[j], func.lin[j]) for j in range(func.dim)] + [(y, slack)],
            LE,
            rhs - func.const_term + slack,
        )
        return
    one = model.fixed_one()
    vexpr = [(one, rhs + slack - func.const_term), (y, -slack)] + [
        (xs[j], -func.lin[j]) for j in range(func.dim)
    ]
    vlo, vhi = _interval(model, vexpr)
    v = model.add_var(0.0, max(vhi, 0.0), tag=f"{tag}.v")
    model.add_row([(v, 1.0)] + [(i, -c) for i, c in vexpr], EQ, 0.0)
    zs = []
    for j in range(func.dim):
        if func.quad[j] > 0.0:
            r = float(np.sqrt(func.quad[j]))
            zlo, zhi = _interval(model, [(xs[j], r)])
            z = model.add_var(zlo, zhi, tag=f"{tag}.zc{j}")
            model.add_row([(z, 1.0), (xs[j], -r)], EQ, 0.0)
            zs.append(z)
    model.add_rsoc(one, v, zs)


def _compile_percopy(spec: ProblemSpec, mode: str, style: str) -> ConicModel:
    if mode not in ("integer", "relaxed"):
        raise ValueError("mode must be 'integer' or 'relaxed'")
    model = ConicModel(name=f"{spec.name}:{style}:{mode}")
    # per (class, member): list over blocks of x variable indices
    member_x = {}
    member_y = {}
    for t, cls in enumerate(spec.classes):
        omega = cls.omega
        for i in range(cls.multiplicity):
            ys = [
                model.add_var(0.0, 1.0, integer=(mode == "integer"), tag=f"c{t}.m{i}.y{s}")
                for s in range(omega.k)
            ]
            _coupling_rows(model, omega, ys)
            xs_blocks = []
            for s, (on, off) in enumerate(omega.blocks):
                tag = f"c{t}.m{i}.b{s}"
                ws = _box_vars(model, on, f"{tag}.w")
                _scaled_box(model, ws, ys[s], on.lower, on.upper)
                for func, rhs in on.rows:
                    if style == "per":
                        soc_encode(PerspectiveRow(func, ys[s], ws, rhs), model, tag=f"{tag}.on")
                    else:
                        _encode_p0_rows(
                            model, func, rhs, ws, ys[s],
                            off_const=func.const_term, tag=f"{tag}.on",
                        )
                if off.is_zero_singleton:
                    xs_blocks.append(ws)
                    continue
                ybar = model.add_var(0.0, 1.0, tag=f"{tag}.ybar")
                model.add_row([(ys[s], 1.0), (ybar, 1.0)], EQ, 1.0)
                zs = _box_vars(model, off, f"{tag}.z")
                _scaled_box(model, zs, ybar, off.lower, off.upper)
                for func, rhs in off.rows:
                    if style == "per":
                        soc_encode(PerspectiveRow(func, ybar, zs, rhs), model, tag=f"{tag}.off")
                    else:
                        _encode_p0_rows(
                            model, func, rhs, zs, ybar,
                            off_const=func.const_term, tag=f"{tag}.off",
                        )
                xs = []
                for j in range(on.dim):
                    lo = model.lower[ws[j]] + model.lower[zs[j]]
                    hi = model.upper[ws[j]] + model.upper[zs[j]]
                    x = model.add_var(lo, hi, tag=f"{tag}.x{j}")
                    model.add_row([(x, 1.0), (ws[j], -1.0), (zs[j], -1.0)], EQ, 0.0)
                    xs.append(x)
                xs_blocks.append(xs)
            member_x[(t, i)] = xs_blocks
            member_y[(t, i)] = ys
            for s in range(omega.k):
                model.add_objective(ys[s], cls.obj_y[s])
            for s, xs in enumerate(xs_blocks):
                for j, x in enumerate(xs):
                    model.add_objective(x, cls.obj[s][j])
    for l, (sense, rhs) in enumerate(spec.global_rows):
        coeffs = []
        for t, cls in enumerate(spec.classes):
            for i in range(cls.multiplicity):
                for s, xs in enumerate(member_x[(t, i)]):
                    vec = cls.coupling_coeffs[l][s]
                    coeffs.extend((x, vec[j]) for j, x in enumerate(xs))
        model.add_row(coeffs, _SENSE[sense], rhs)
    return model


def compile_per(spec: ProblemSpec, mode: str = "integer") -> ConicModel:
    """Per-copy perspective reformulation (exact for both modes)."""
    return _compile_percopy(spec, mode, "per")


def compile_p0(spec: ProblemSpec, mode: str = "integer") -> ConicModel:
    """Weak baseline: unscaled rows, indicator-scaled boxes only."""
    return _compile_percopy(spec, mode, "p0")
