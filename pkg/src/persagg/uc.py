"""Unit commitment: state-transition graph model, spec builder, 3-bin baseline.

A unit's feasible on/off schedules are the source-to-sink paths of a DAG
with one ON node and one OFF node per period. An ON arc (OFF_h -> ON_r)
means "turn on at h, stay on through r"; an OFF arc (ON_h -> OFF_r) means
"off during h+1 .. r-1, turn on again at r". Arc choices are a unit flow,
so the coupling matrix is a node-arc incidence matrix (totally unimodular).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from .conic_model import EQ, LE, ConicModel
from .perspective import PerspectiveRow, soc_encode
from .problem import SENSE_EQ, SENSE_LE, EquivClass, OmegaSpec, ProblemSpec
from .quadratics import BlockSet, ConvexQuadratic
from .solver import OPTIMAL, SolverTolerances, solve_relaxation

ON, OFF = "ON", "OFF"


@dataclass(frozen=True)
class UnitSpec:
    p_min: float
    p_max: float
    ramp_up: float
    ramp_down: float
    su_limit: float
    sd_limit: float
    min_up: int
    min_down: int
    cost_quad: float
    cost_lin: float
    cost_fixed: float
    startup_cost: float
    initial_state: int  # > 0: on that many periods already; <= 0: off

    def __post_init__(self):
        if not (0 < self.p_min <= self.p_max):
            raise ValueError("need 0 < p_min <= p_max")
        if self.min_up < 1 or self.min_down < 1:
            raise ValueError("min_up and min_down must be >= 1")
        if self.su_limit < self.p_min or self.sd_limit < self.p_min:
            raise ValueError("start-up/shut-down limits must be >= p_min")
        if self.cost_quad < 0:
            raise ValueError("quadratic cost must be nonnegative")


@dataclass(frozen=True)
class Arc:
    kind: str  # ON or OFF
    tail: str
    head: str
    start: int  # ON: first on period; OFF: first off period
    end: int  # ON: last on period; OFF: last off period (end < start = empty)


@dataclass
class DPGraph:
    n: int
    nodes: list
    arcs: list
    incidence: np.ndarray
    delta: np.ndarray

    @property
    def on_arcs(self):
        return [a for a in self.arcs if a.kind == ON]


class NoValidScheduleError(ValueError):
    pass


def _node_order(n: int) -> list:
    return ["S", "D"] + [f"ON{j}" for j in range(1, n + 1)] + [f"OFF{j}" for j in range(1, n + 1)]


def build_dp_graph(unit: UnitSpec, n: int) -> DPGraph:
    if n < 1:
        raise ValueError("horizon must have at least one period")
    mu, md = unit.min_up, unit.min_down
    arcs = []
    initially_on = unit.initial_state > 0
    tau = abs(unit.initial_state)

    def on_spans(h):
        rs = set(range(min(h + mu - 1, n), n + 1))
        rs.add(n)  # horizon-end truncation
        return sorted(r for r in rs if r >= h)

    # ON arcs (enumerated first so arc 0 is the natural symmetry key)
    if initially_on:
        r_min = max(1, mu - tau)
        for r in sorted(set(range(min(r_min, n), n + 1)) | {n}):
            arcs.append(Arc(ON, "S", f"ON{r}", 1, r))
    for h in range(1, n + 1):
        for r in on_spans(h):
            arcs.append(Arc(ON, f"OFF{h}", f"ON{r}", h, r))
    # OFF arcs
    if initially_on:
        if tau >= mu:
            for h in range(md + 1, n + 1):
                arcs.append(Arc(OFF, "S", f"OFF{h}", 1, h - 1))
            arcs.append(Arc(OFF, "S", "D", 1, n))
    else:
        h_min = 1 if unit.initial_state == 0 else max(1, md - tau + 1)
        for h in range(h_min, n + 1):
            arcs.append(Arc(OFF, "S", f"OFF{h}", 1, h - 1))
        arcs.append(Arc(OFF, "S", "D", 1, n))
    for h in range(1, n + 1):
        for r in range(h + md + 1, n + 1):
            arcs.append(Arc(OFF, f"ON{h}", f"OFF{r}", h + 1, r - 1))
        arcs.append(Arc(OFF, f"ON{h}", "D", h + 1, n))  # sink exemption

    # keep only arcs lying on some S -> D path
    fwd = {"S"}
    changed = True
    while changed:
        changed = False
        for a in arcs:
            if a.tail in fwd and a.head not in fwd:
                fwd.add(a.head)
                changed = True
    bwd = {"D"}
    changed = True
    while changed:
        changed = False
        for a in arcs:
            if a.head in bwd and a.tail not in bwd:
                bwd.add(a.tail)
                changed = True
    arcs = [a for a in arcs if a.tail in fwd and a.head in bwd]
    if not any(a.tail == "S" for a in arcs):
        raise NoValidScheduleError("initial state admits no feasible schedule")

    nodes = _node_order(n)
    idx = {name: i for i, name in enumerate(nodes)}
    E = np.zeros((len(nodes), len(arcs)))
    for s, a in enumerate(arcs):
        E[idx[a.tail], s] -= 1.0
        E[idx[a.head], s] += 1.0
    delta = np.zeros(len(nodes))
    delta[idx["S"]], delta[idx["D"]] = -1.0, 1.0
    return DPGraph(n=n, nodes=nodes, arcs=arcs, incidence=E, delta=delta)


def decode_schedule(graph: DPGraph, y, tol: float = 0.5) -> list:
    """Map a binary arc vector to per-period on/off; raises if not a path."""
    active = [graph.arcs[s] for s in range(len(graph.arcs)) if y[s] > tol]
    by_tail = {}
    for a in active:
        if a.tail in by_tail:
            raise ValueError("multiple outgoing arcs at " + a.tail)
        by_tail[a.tail] = a
    state = [False] * graph.n
    node = "S"
    seen = set()
    while node != "D":
        if node in seen or node not in by_tail:
            raise ValueError("active arcs do not form an S->D path")
        seen.add(node)
        a = by_tail[node]
        if a.kind == ON:
            for j in range(a.start, a.end + 1):
                state[j - 1] = True
        node = a.head
    if len(by_tail) != len(seen):
        raise ValueError("active arcs off the S->D path")
    return state


@dataclass(frozen=True)
class FleetSpec:
    classes: tuple  # ((UnitSpec, count), ...)
    demand: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "demand", np.asarray(self.demand, dtype=float))
        for _, count in self.classes:
            if count < 1:
                raise ValueError("count must be >= 1")

    @property
    def n(self) -> int:
        return len(self.demand)


def _on_arc_blockset(unit: UnitSpec, arc: Arc, n: int, has_startup: bool):
    """On-set over (x_h..x_r, z) with ramp rows and a cost epigraph row."""
    tau = arc.end - arc.start + 1
    dim = tau + 1
    lower = [unit.p_min] * tau
    upper = [unit.p_max] * tau
    if has_startup:
        upper[0] = min(upper[0], unit.su_limit)
    if arc.end < n:  # followed by a shutdown
        upper[-1] = min(upper[-1], unit.sd_limit)
    rows = []
    for j in range(tau - 1):
        lin = np.zeros(dim)
        lin[j + 1], lin[j] = 1.0, -1.0
        rows.append((ConvexQuadratic(dim, np.zeros(dim), lin), unit.ramp_up))
        rows.append((ConvexQuadratic(dim, np.zeros(dim), -lin), unit.ramp_down))
    quad = np.array([unit.cost_quad] * tau + [0.0])
    lin = np.array([unit.cost_lin] * tau + [-1.0])
    rows.append((ConvexQuadratic(dim, quad, lin), 0.0))
    cost = ConvexQuadratic(tau, np.full(tau, unit.cost_quad), np.full(tau, unit.cost_lin))
    z_hi = cost.box_max(lower, upper)
    z_lo = _min_span_cost(unit, lower, upper, cost)
    return BlockSet(dim, tuple(rows), np.array(lower + [z_lo]), np.array(upper + [z_hi]))


def _min_span_cost(unit: UnitSpec, lower, upper, cost: ConvexQuadratic) -> float:
    """Convex minimum of the span running cost subject to ramp limits."""
    tau = cost.dim
    m = ConicModel(name="span-cost")
    xs = [m.add_var(lower[j], upper[j], tag=f"x{j}") for j in range(tau)]
    for j in range(tau - 1):
        m.add_row([(xs[j + 1], 1.0), (xs[j], -1.0)], LE, unit.ramp_up)
        m.add_row([(xs[j], 1.0), (xs[j + 1], -1.0)], LE, unit.ramp_down)
    t = m.add_var(cost.box_min(lower[:tau], upper[:tau]), cost.box_max(lower[:tau], upper[:tau]), tag="t")
    one = m.fixed_one()
    shifted = ConvexQuadratic(tau + 1, np.append(cost.quad, 0.0), np.append(cost.lin, -1.0))
    soc_encode(PerspectiveRow(shifted, one, xs + [t], 0.0), m, tag="epi")
    m.add_objective(t, 1.0)
    sol = solve_relaxation(m, SolverTolerances())
    if sol.status != OPTIMAL:
        raise RuntimeError("span cost bound solve failed: " + sol.status)
    return float(sol.primal_objective)


def build_uc(fleet: FleetSpec) -> ProblemSpec:
    n = fleet.n
    classes = []
    for unit, count in fleet.classes:
        g = build_dp_graph(unit, n)
        k = len(g.arcs)
        blocks = []
        obj = []
        obj_y = np.zeros(k)
        for s, a in enumerate(g.arcs):
            if a.kind == ON:
                has_startup = not (a.tail == "S")
                on = _on_arc_blockset(unit, a, n, has_startup)
                blocks.append((on, BlockSet.zero(on.dim)))
                c = np.zeros(on.dim)
                c[-1] = 1.0  # epigraph carries the running cost
                obj.append(c)
                tau = a.end - a.start + 1
                obj_y[s] = tau * unit.cost_fixed + (unit.startup_cost if has_startup else 0.0)
            else:
                blocks.append((BlockSet.zero(1), BlockSet.zero(1)))
                obj.append(np.zeros(1))
        # coupling: flow conservation (equalities) plus y >= 0 rows
        A = np.vstack([g.incidence, -np.eye(k)])
        b = np.concatenate([g.delta, np.zeros(k)])
        senses = tuple([SENSE_EQ] * g.incidence.shape[0] + [SENSE_LE] * k)
        omega = OmegaSpec(
            blocks=tuple(blocks), coupling_A=A, coupling_b=b,
            coupling_senses=senses, tu_asserted=True,
        )
        coupling = []
        for j in range(1, n + 1):  # demand row per period
            row = []
            for s, a in enumerate(g.arcs):
                if a.kind == ON:
                    vec = np.zeros(blocks[s][0].dim)
                    if a.start <= j <= a.end:
                        vec[j - a.start] = 1.0
                    row.append(vec)
                else:
                    row.append(np.zeros(1))
            coupling.append(tuple(row))
        classes.append(
            EquivClass(
                omega=omega, multiplicity=count, obj=tuple(obj), obj_y=obj_y,
                coupling_coeffs=tuple(coupling),
            )
        )
    global_rows = tuple((SENSE_EQ, float(d)) for d in fleet.demand)
    return ProblemSpec(classes=tuple(classes), global_rows=global_rows, name="uc")


def uc_graphs(fleet: FleetSpec) -> list:
    return [build_dp_graph(unit, fleet.n) for unit, _ in fleet.classes]


# -- classical 3-bin baseline ----------------------------------------------


def build_3bin(fleet: FleetSpec, mode: str = "integer") -> ConicModel:
    """Commitment/startup/shutdown binaries per unit per period."""
    n = fleet.n
    m = ConicModel(name="uc:3bin:" + mode)
    one = m.fixed_one()
    integer = mode == "integer"
    unit_list = []
    for unit, count in fleet.classes:
        unit_list.extend([unit] * count)
    p_idx = []
    for ui, unit in enumerate(unit_list):
        initially_on = unit.initial_state > 0
        tau = abs(unit.initial_state)
        on_window = min(max(0, unit.min_up - tau), n) if initially_on else 0
        off_window = 0 if initially_on else (
            0 if unit.initial_state == 0 else min(max(0, unit.min_down - tau), n)
        )
        u = [
            m.add_var(
                1.0 if j < on_window else 0.0,
                0.0 if j < off_window else 1.0,
                integer=integer, tag=f"u{ui}.{j}",
            )
            for j in range(n)
        ]
        v = [m.add_var(0.0, 1.0, integer=integer, tag=f"v{ui}.{j}") for j in range(n)]
        w = [m.add_var(0.0, 1.0, integer=integer, tag=f"w{ui}.{j}") for j in range(n)]
        p = [m.add_var(0.0, unit.p_max, tag=f"p{ui}.{j}") for j in range(n)]
        e_hi = unit.cost_quad * unit.p_max**2 + abs(unit.cost_lin) * unit.p_max
        e = [m.add_var(0.0, e_hi, tag=f"e{ui}.{j}") for j in range(n)]
        p_idx.append(p)
        u0 = 1.0 if initially_on else 0.0
        for j in range(n):
            prev = [(u[j - 1], -1.0)] if j > 0 else []
            m.add_row([(u[j], 1.0), (v[j], -1.0), (w[j], 1.0)] + prev, EQ, u0 if j == 0 else 0.0)
            m.add_row([(v[j], 1.0), (w[j], 1.0)], LE, 1.0)
            lo = max(0, j - unit.min_up + 1)
            m.add_row([(v[t], 1.0) for t in range(lo, j + 1)] + [(u[j], -1.0)], LE, 0.0)
            lo = max(0, j - unit.min_down + 1)
            m.add_row([(w[t], 1.0) for t in range(lo, j + 1)] + [(u[j], 1.0)], LE, 1.0)
            m.add_row([(p[j], 1.0), (u[j], -unit.p_max)], LE, 0.0)
            m.add_row([(p[j], -1.0), (u[j], unit.p_min)], LE, 0.0)
            if unit.su_limit < unit.p_max:
                m.add_row(
                    [(p[j], 1.0), (u[j], -unit.p_max), (v[j], unit.p_max - unit.su_limit)],
                    LE, 0.0,
                )
            if j + 1 < n and unit.sd_limit < unit.p_max:
                m.add_row(
                    [(p[j], 1.0), (u[j], -unit.p_max), (w[j + 1], unit.p_max - unit.sd_limit)],
                    LE, 0.0,
                )
            if j > 0:
                m.add_row(
                    [(p[j], 1.0), (p[j - 1], -1.0), (u[j - 1], -unit.ramp_up),
                     (v[j], -unit.su_limit)],
                    LE, 0.0,
                )
                m.add_row(
                    [(p[j - 1], 1.0), (p[j], -1.0), (u[j], -unit.ramp_down),
                     (w[j], -unit.sd_limit)],
                    LE, 0.0,
                )
            # e >= a p^2 + b p  (plain convex row, no perspective scaling)
            if unit.cost_quad > 0.0:
                vexpr = m.add_var(0.0, e_hi + abs(unit.cost_lin) * unit.p_max, tag=f"ev{ui}.{j}")
                m.add_row([(vexpr, 1.0), (e[j], -1.0), (p[j], unit.cost_lin)], EQ, 0.0)
                r = float(np.sqrt(unit.cost_quad))
                z = m.add_var(0.0, r * unit.p_max, tag=f"ez{ui}.{j}")
                m.add_row([(z, 1.0), (p[j], -r)], EQ, 0.0)
                m.add_rsoc(one, vexpr, [z])
            else:
                m.add_row([(p[j], unit.cost_lin), (e[j], -1.0)], LE, 0.0)
            m.add_objective(e[j], 1.0)
            m.add_objective(u[j], unit.cost_fixed)
            m.add_objective(v[j], unit.startup_cost)
    for j in range(n):
        m.add_row(
            [(p_idx[ui][j], 1.0) for ui in range(len(unit_list))], EQ, float(fleet.demand[j])
        )
    return m


# -- fleet serialization and seeded generation -----------------------------


def fleet_to_json(fleet: FleetSpec, metadata: dict = None) -> bytes:
    doc = {
        "format_version": 1,
        "classes": [{"unit": asdict(u), "count": c} for u, c in fleet.classes],
        "demand": list(map(float, fleet.demand)),
    }
    if metadata is not None:
        doc["metadata"] = metadata
    return (json.dumps(doc, indent=1) + "\n").encode("ascii")


def fleet_from_json(data: bytes) -> FleetSpec:
    doc = json.loads(data.decode("ascii"))
    if doc.get("format_version") != 1:
        raise ValueError("unsupported format_version")
    return FleetSpec(
        classes=tuple((UnitSpec(**c["unit"]), c["count"]) for c in doc["classes"]),
        demand=np.array(doc["demand"]),
    )


def gen_fleet(num_classes: int, max_count: int, periods: int, seed: int) -> FleetSpec:
    """Seeded random fleet with a demand profile feasible by construction.

    All units start on with min-up satisfied; the demand tracks a smooth
    profile inside the fleet's always-on power band with per-period moves
    within the aggregate ramp capability.
    """
    classes = []
    total_min = total_max = ramp_cap = 0.0
    for t in range(num_classes):
        rng = np.random.default_rng([seed, t, 0])
        p_min = float(rng.uniform(20.0, 60.0))
        p_max = float(p_min * rng.uniform(2.0, 4.0))
        ramp = float((p_max - p_min) * rng.uniform(0.3, 0.6))
        su = float(min(p_max, p_min + ramp))
        unit = UnitSpec(
            p_min=p_min, p_max=p_max, ramp_up=ramp, ramp_down=ramp,
            su_limit=su, sd_limit=su,
            min_up=int(rng.integers(2, 5)), min_down=int(rng.integers(2, 5)),
            cost_quad=float(rng.uniform(0.01, 0.08)),
            cost_lin=float(rng.uniform(5.0, 20.0)),
            cost_fixed=float(rng.uniform(50.0, 200.0)),
            startup_cost=float(rng.uniform(100.0, 500.0)),
            initial_state=10**6,  # on, min-up satisfied
        )
        count = int(rng.integers(1, max_count + 1))
        classes.append((unit, count))
        total_min += p_min * count
        total_max += p_max * count
        ramp_cap += ramp * count
    rng = np.random.default_rng([seed, 10**6])
    band = total_max - total_min
    beta = 0.25 + 0.2 * np.sin(np.linspace(0.0, 2.5 * np.pi, periods) + rng.uniform(0, np.pi))
    beta += rng.uniform(-0.03, 0.03, size=periods)
    beta = np.clip(beta, 0.05, 0.6)
    max_move = 0.5 * ramp_cap / band if band > 0 else 0.0
    for j in range(1, periods):
        beta[j] = min(max(beta[j], beta[j - 1] - max_move), beta[j - 1] + max_move)
    demand = total_min + beta * band
    return FleetSpec(classes=tuple(classes), demand=demand)
