"""Separable problem builders: general SP, line cover, and random quadratics.

Each member owns one scalar decision x, one indicator y, per-row epigraph
variables w_l with g_l(x) <= w_l, and a cost epigraph z with f(x) <= z. The
global rows then couple only the w variables. Epigraph boxes are computed
exactly: interval minimum at the vertex -b/(2a) clipped to the box, maximum
at an endpoint.

Random instances are generated with numpy's default 64-bit generator
(PCG64). Streams are laid out as SeedSequence([seed, class_index, family])
with family 0 for objective coefficients, 1 for row coefficients and 2 for
the hidden feasible point, so one independent substream exists per class and
parameter family.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import SENSE_EQ, SENSE_LE, EquivClass, OmegaSpec, ProblemSpec
from .quadratics import BlockSet, ConvexQuadratic


@dataclass(frozen=True)
class SepClassParams:
    a: float  # objective f(x) = a x^2 + b x
    b: float
    fixed_cost: float
    lower: float
    upper: float
    row_coeffs: tuple  # per global row: (a_l, b_l) for g_l(x) = a_l x^2 + b_l x
    multiplicity: int

    def __post_init__(self):
        object.__setattr__(
            self, "row_coeffs", tuple((float(p), float(q)) for p, q in self.row_coeffs)
        )
        if self.a < 0:
            raise ValueError("objective curvature must be nonnegative")
        if any(p < 0 or q < 0 for p, q in self.row_coeffs):
            raise ValueError("row coefficients must be nonnegative")
        if self.lower > self.upper:
            raise ValueError("empty box")
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be >= 1")


@dataclass(frozen=True)
class LCParams:
    T: int
    N: int
    seed: int
    # fixed by the family: u = 1, d = 1


@dataclass(frozen=True)
class SQPParams:
    T: int
    N: int
    m: int
    seed: int
    # fixed by the family: box [-1, 1]

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")


def _quad1(a: float, b: float, dim: int, coord: int, extra: float = 0.0, extra_coord: int = -1):
    quad = np.zeros(dim)
    lin = np.zeros(dim)
    quad[coord] = a
    lin[coord] = b
    if extra_coord >= 0:
        lin[extra_coord] = extra
    return ConvexQuadratic(dim, quad, lin)


def build_sp(classes, rhs, senses=None) -> ProblemSpec:
    """Separable problem over scalar members with epigraph coupling.

    Global row l reads sum over members of w_l with the given sense. A
    quadratic g on an equality row would need w_l = g(x) exactly, which is
    not convex, so only linear g rows may appear in equality rows.
    """
    rhs = [float(v) for v in rhs]
    senses = tuple(senses) if senses is not None else tuple(SENSE_LE for _ in rhs)
    if len(senses) != len(rhs):
        raise ValueError("senses and rhs length mismatch")
    out = []
    for cls in classes:
        if len(cls.row_coeffs) != len(rhs):
            raise ValueError("row_coeffs length must match global row count")
        m = len(rhs)
        dim = 1 + m + 1  # x, w_0..w_{m-1}, z
        lo = [cls.lower]
        hi = [cls.upper]
        rows = []
        for l, (al, bl) in enumerate(cls.row_coeffs):
            if al > 0 and senses[l] == SENSE_EQ:
                raise ValueError("quadratic row in an equality global row")
            g = ConvexQuadratic(1, np.array([al]), np.array([bl]))
            lo.append(g.box_min([cls.lower], [cls.upper]))
            hi.append(g.box_max([cls.lower], [cls.upper]))
            rows.append((_quad1(al, bl, dim, 0, extra=-1.0, extra_coord=1 + l), 0.0))
            if al == 0.0:  # affine g: tie w to g(x) exactly
                rows.append((_quad1(0.0, -bl, dim, 0, extra=1.0, extra_coord=1 + l), 0.0))
        f = ConvexQuadratic(1, np.array([cls.a]), np.array([cls.b]))
        lo.append(f.box_min([cls.lower], [cls.upper]))
        hi.append(f.box_max([cls.lower], [cls.upper]))
        rows.append((_quad1(cls.a, cls.b, dim, 0, extra=-1.0, extra_coord=dim - 1), 0.0))
        on = BlockSet(dim, tuple(rows), np.array(lo), np.array(hi))
        omega = OmegaSpec(
            blocks=((on, BlockSet.zero(dim)),),
            coupling_A=np.zeros((0, 1)),
            coupling_b=np.zeros(0),
        )
        obj = np.zeros(dim)
        obj[-1] = 1.0
        coupling = []
        for l in range(m):
            vec = np.zeros(dim)
            vec[1 + l] = 1.0
            coupling.append((vec,))
        out.append(
            EquivClass(
                omega=omega,
                multiplicity=cls.multiplicity,
                obj=(obj,),
                obj_y=np.array([cls.fixed_cost]),
                coupling_coeffs=tuple(coupling),
            )
        )
    return ProblemSpec(
        classes=tuple(out),
        global_rows=tuple(zip(senses, rhs)),
        name="sp",
    )


def build_line_cover(classes, d: float) -> ProblemSpec:
    """Line cover: members with f(x) = a x^2 on [0, u] covering length d.

    ``classes`` is a list of (a, fixed_cost, u, multiplicity) tuples. The
    single global row is the equality sum x = d, expressed through the
    linear g(x) = x.
    """
    sep = [
        SepClassParams(
            a=float(a), b=0.0, fixed_cost=float(c), lower=0.0, upper=float(u),
            row_coeffs=((0.0, 1.0),), multiplicity=int(n),
        )
        for a, c, u, n in classes
    ]
    spec = build_sp(sep, [float(d)], [SENSE_EQ])
    return ProblemSpec(classes=spec.classes, global_rows=spec.global_rows, name="lc")


def gen_lc_instance(params: LCParams):
    """Random line cover per the seeded recipe; returns (spec, metadata)."""
    n = params.T * params.N
    rng_global = np.random.default_rng([params.seed, 2**31, 0])
    c_max = float(rng_global.choice([10 * n, 20 * n, 30 * n]))
    classes = []
    for t in range(params.T):
        rng_a = np.random.default_rng([params.seed, t, 0])
        rng_c = np.random.default_rng([params.seed, t, 1])
        a = float(rng_a.uniform(n, c_max))
        c = int(rng_c.integers(1, n + 1))
        classes.append((a, c, 1.0, params.N))
    spec = build_line_cover(classes, 1.0)
    meta = {
        "family": "lc", "seed": params.seed, "T": params.T, "N": params.N,
        "c_max": c_max, "recipe_version": 1,
    }
    return spec, meta


def gen_sqp_instance(params: SQPParams):
    """Random separable quadratic program; returns (spec, metadata).

    The right-hand sides are evaluated at a hidden point with all members
    on, so the instance is feasible by construction. The hidden point is
    recorded in the metadata for audits.
    """
    m = params.m
    class_params = []
    xhat = []
    for t in range(params.T):
        rng_f = np.random.default_rng([params.seed, t, 0])
        rng_rows = np.random.default_rng([params.seed, t, 1])
        rng_x = np.random.default_rng([params.seed, t, 2])
        a = float(rng_f.uniform(0.0, 1.0))
        c = float(rng_f.uniform(0.0, 1.0))
        b = float(rng_f.uniform(2.0, 5.0))
        rows = [
            (float(rng_rows.uniform(0.0, 2.0)), float(rng_rows.uniform(0.0, 5.0)))
            for _ in range(m)
        ]
        rows.append((0.0, 1.0))  # equality row g(x) = x
        class_params.append((a, b, c, tuple(rows)))
        xhat.append(rng_x.uniform(-1.0, 1.0, size=params.N))
    rhs = []
    for l in range(m):
        total = 0.0
        for t, (_, _, _, rows) in enumerate(class_params):
            al, bl = rows[l]
            total += float(np.sum(al * xhat[t] ** 2 + bl * xhat[t]))
        rhs.append(total)
    rhs.append(float(sum(np.sum(x) for x in xhat)))
    senses = [SENSE_LE] * m + [SENSE_EQ]
    classes = [
        SepClassParams(
            a=a, b=b, fixed_cost=c, lower=-1.0, upper=1.0,
            row_coeffs=rows, multiplicity=params.N,
        )
        for a, b, c, rows in class_params
    ]
    spec = build_sp(classes, rhs, senses)
    spec = ProblemSpec(classes=spec.classes, global_rows=spec.global_rows, name="sqp")
    meta = {
        "family": "sqp", "seed": params.seed, "T": params.T, "N": params.N,
        "m": params.m, "recipe_version": 1,
        "xhat": [list(map(float, x)) for x in xhat],
    }
    return spec, meta
