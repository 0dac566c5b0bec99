"""Problem intermediate representation for the indicator-structured class.

A problem instance is a list of equivalence classes. Each class owns a
feasible-set description (per-block on/off sets plus an integer coupling
polytope over the binaries), a multiplicity, linear costs, and its
coefficients in the global linear rows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .quadratics import BlockSet, ConvexQuadratic

SENSE_LE = "<="
SENSE_EQ = "=="


@dataclass(frozen=True)
class OmegaSpec:
    """One class's feasible set: per-block on/off sets + binary coupling."""

    blocks: tuple  # ((on: BlockSet, off: BlockSet), ...) indexed by s
    coupling_A: np.ndarray  # integer matrix over the k binaries
    coupling_b: np.ndarray
    coupling_senses: tuple = ()  # per coupling row, SENSE_LE or SENSE_EQ
    tu_asserted: bool = False

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        A = np.asarray(self.coupling_A, dtype=float).reshape(-1, self.k)
        b = np.asarray(self.coupling_b, dtype=float).reshape(-1)
        senses = tuple(self.coupling_senses) or tuple(SENSE_LE for _ in range(A.shape[0]))
        object.__setattr__(self, "coupling_A", A)
        object.__setattr__(self, "coupling_b", b)
        object.__setattr__(self, "coupling_senses", senses)
        if A.shape[0] != b.shape[0] or len(senses) != A.shape[0]:
            raise ValueError("coupling row count mismatch")
        for on, off in self.blocks:
            if on.dim != off.dim:
                raise ValueError("on/off sets must share one dim per block")

    @property
    def k(self) -> int:
        return len(self.blocks)

    def block_dims(self) -> list:
        return [on.dim for on, _ in self.blocks]

    def coupling_ineq(self):
        """Coupling rows as a pure <= system (equalities doubled)."""
        rows_A, rows_b = [], []
        for a, b, sense in zip(self.coupling_A, self.coupling_b, self.coupling_senses):
            rows_A.append(a)
            rows_b.append(b)
            if sense == SENSE_EQ:
                rows_A.append(-a)
                rows_b.append(-b)
        if rows_A:
            return np.array(rows_A), np.array(rows_b)
        return np.zeros((0, self.k)), np.zeros(0)

    def binary_feasible(self, y, tol: float = 1e-9) -> bool:
        y = np.asarray(y, dtype=float)
        for a, b, sense in zip(self.coupling_A, self.coupling_b, self.coupling_senses):
            v = float(a @ y)
            if sense == SENSE_EQ and abs(v - b) > tol:
                return False
            if sense == SENSE_LE and v > b + tol:
                return False
        return True

    def enumerate_binary(self) -> list:
        """All coupling-feasible binary assignments, lexicographic order."""
        out = []
        for mask in range(1 << self.k):
            y = np.array([(mask >> s) & 1 for s in range(self.k)], dtype=float)
            if self.binary_feasible(y):
                out.append(y)
        return out


@dataclass(frozen=True)
class EquivClass:
    omega: OmegaSpec
    multiplicity: int
    obj: tuple  # per-block cost vectors on x
    obj_y: np.ndarray = None  # linear cost on the binaries
    coupling_coeffs: tuple = ()  # per global row: per-block vectors

    def __post_init__(self):
        obj = tuple(np.asarray(v, dtype=float) for v in self.obj)
        object.__setattr__(self, "obj", obj)
        oy = np.zeros(self.omega.k) if self.obj_y is None else np.asarray(self.obj_y, dtype=float)
        object.__setattr__(self, "obj_y", oy)
        cc = tuple(tuple(np.asarray(v, dtype=float) for v in row) for row in self.coupling_coeffs)
        object.__setattr__(self, "coupling_coeffs", cc)
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be >= 1")
        dims = self.omega.block_dims()
        if [v.shape[0] for v in obj] != dims:
            raise ValueError("obj dimensions do not match block dims")
        if oy.shape != (self.omega.k,):
            raise ValueError("obj_y length must equal k")
        for row in cc:
            if [v.shape[0] for v in row] != dims:
                raise ValueError("coupling_coeffs dimensions do not match block dims")


@dataclass(frozen=True)
class ProblemSpec:
    classes: tuple
    global_rows: tuple  # ((sense, rhs), ...)
    name: str = "problem"

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        rows = tuple((str(s), float(r)) for s, r in self.global_rows)
        object.__setattr__(self, "global_rows", rows)
        for cls in self.classes:
            if len(cls.coupling_coeffs) != len(rows):
                raise ValueError("every class must supply coefficients for every global row")

    @property
    def num_members(self) -> int:
        return sum(c.multiplicity for c in self.classes)

    @property
    def num_binaries(self) -> int:
        return sum(c.multiplicity * c.omega.k for c in self.classes)


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        return "OK" if self.ok else "; ".join(self.violations)


def _blockset_nonempty(bs: BlockSet, tol: float = 1e-7) -> bool:
    """Convex feasibility: min of the worst row violation over the box."""
    if not bs.rows:
        return True
    from .solver import SolverTolerances, solve_relaxation
    from .conic_model import ConicModel, EQ, LE

    m = ConicModel(name="feas")
    xs = [m.add_var(lo, up, tag=f"x{j}") for j, (lo, up) in enumerate(zip(bs.lower, bs.upper))]
    slack_lo = min(func.box_min(bs.lower, bs.upper) - rhs for func, rhs in bs.rows)
    slack_hi = max(func.box_max(bs.lower, bs.upper) - rhs for func, rhs in bs.rows)
    mv = m.add_var(min(slack_lo, 0.0), max(slack_hi, 0.0), tag="viol")
    one = m.fixed_one()
    for func, rhs in bs.rows:
        if func.is_linear:
            # b.x - mv <= rhs - c
            m.add_row([(xs[j], func.lin[j]) for j in range(bs.dim)] + [(mv, -1.0)],
                      LE, rhs - func.const_term)
        else:
            v_lo = rhs - func.const_term + slack_lo  # loose interval for the cone aux
            v_hi = rhs - func.const_term + slack_hi + sum(
                max(abs(func.lin[j] * bs.lower[j]), abs(func.lin[j] * bs.upper[j]))
                for j in range(bs.dim))
            v = m.add_var(0.0, max(v_hi, 0.0) - min(v_lo, 0.0) + abs(v_lo) + 1.0, tag="v")
            # v = rhs - c + mv - b.x
            m.add_row([(v, 1.0), (mv, -1.0)] + [(xs[j], func.lin[j]) for j in range(bs.dim)],
                      EQ, rhs - func.const_term)
            zs = []
            for j in range(bs.dim):
                q = func.quad[j]
                if q > 0.0:
                    r = np.sqrt(q)
                    bnd = max(abs(r * bs.lower[j]), abs(r * bs.upper[j]))
                    z = m.add_var(-bnd, bnd, tag="z")
                    m.add_row([(z, 1.0), (xs[j], -r)], EQ, 0.0)
                    zs.append(z)
            m.add_rsoc(one, v, zs)
    m.add_objective(mv, 1.0)
    sol = solve_relaxation(m, SolverTolerances())
    if sol.status != "optimal":
        return False
    return sol.primal_objective <= tol


def _polytope_bounds_ok(omega: OmegaSpec, tol: float = 1e-7):
    """Check {y | Ay <= b (senses)} is nonempty and inside [0,1]^k via LPs."""
    A, b = omega.coupling_ineq()
    k = omega.k
    if A.shape[0] == 0:
        return True, True
    res = linprog(np.zeros(k), A_ub=A, b_ub=b, bounds=[(0, 1)] * k, method="highs")
    nonempty = res.status == 0
    inside = True
    for j in range(k):
        for sign in (1.0, -1.0):
            c = np.zeros(k)
            c[j] = sign
            r = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * k, method="highs")
            if r.status == 3:  # unbounded
                inside = False
            elif r.status == 0:
                # min y_j = r.fun must be >= 0; max y_j = -r.fun must be <= 1
                if sign > 0 and r.fun < -tol:
                    inside = False
                if sign < 0 and -r.fun > 1 + tol:
                    inside = False
            if not inside:
                break
        if not inside:
            break
    return nonempty, inside


def validate_problem(spec: ProblemSpec) -> ValidationReport:
    """Structural and feasibility validation; violations are data, not faults."""
    report = ValidationReport()
    for ci, cls in enumerate(spec.classes):
        omega = cls.omega
        nonempty, inside = _polytope_bounds_ok(omega)
        if not nonempty:
            report.violations.append(f"class {ci}: empty coupling polytope")
        if not inside:
            report.violations.append(f"class {ci}: coupling polytope not inside unit box")
        for si, (on, off) in enumerate(omega.blocks):
            if not _blockset_nonempty(on):
                report.violations.append(f"class {ci} block {si}: empty on-set")
            if not off.is_zero_singleton and not _blockset_nonempty(off):
                report.violations.append(f"class {ci} block {si}: empty off-set")
    return report


# -- JSON schema (format_version 1) ----------------------------------------


def _blockset_doc(bs: BlockSet) -> dict:
    return {
        "dim": bs.dim,
        "lower": list(map(float, bs.lower)),
        "upper": list(map(float, bs.upper)),
        "rows": [
            {
                "quad": list(map(float, f.quad)),
                "lin": list(map(float, f.lin)),
                "const": float(f.const_term),
                "rhs": float(rhs),
            }
            for f, rhs in bs.rows
        ],
    }


def _blockset_from(doc: dict) -> BlockSet:
    rows = tuple(
        (ConvexQuadratic(doc["dim"], np.array(r["quad"]), np.array(r["lin"]), r["const"]), r["rhs"])
        for r in doc["rows"]
    )
    return BlockSet(doc["dim"], rows, np.array(doc["lower"]), np.array(doc["upper"]))


def spec_to_json(spec: ProblemSpec, metadata: dict = None) -> bytes:
    doc = {
        "format_version": 1,
        "name": spec.name,
        "global_rows": [{"sense": s, "rhs": r} for s, r in spec.global_rows],
        "classes": [
            {
                "multiplicity": cls.multiplicity,
                "obj": [list(map(float, v)) for v in cls.obj],
                "obj_y": list(map(float, cls.obj_y)),
                "coupling_coeffs": [
                    [list(map(float, v)) for v in row] for row in cls.coupling_coeffs
                ],
                "omega": {
                    "tu_asserted": cls.omega.tu_asserted,
                    "coupling_A": [list(map(float, row)) for row in cls.omega.coupling_A],
                    "coupling_b": list(map(float, cls.omega.coupling_b)),
                    "coupling_senses": list(cls.omega.coupling_senses),
                    "blocks": [
                        {"on": _blockset_doc(on), "off": _blockset_doc(off)}
                        for on, off in cls.omega.blocks
                    ],
                },
            }
            for cls in spec.classes
        ],
    }
    if metadata is not None:
        doc["metadata"] = metadata
    return (json.dumps(doc, indent=1) + "\n").encode("ascii")


def spec_from_json(data: bytes) -> ProblemSpec:
    doc = json.loads(data.decode("ascii"))
    if doc.get("format_version") != 1:
        raise ValueError("unsupported format_version")
    classes = []
    for c in doc["classes"]:
        od = c["omega"]
        omega = OmegaSpec(
            blocks=tuple((_blockset_from(b["on"]), _blockset_from(b["off"])) for b in od["blocks"]),
            coupling_A=np.array(od["coupling_A"], dtype=float).reshape(-1, len(od["blocks"])),
            coupling_b=np.array(od["coupling_b"], dtype=float),
            coupling_senses=tuple(od["coupling_senses"]),
            tu_asserted=od["tu_asserted"],
        )
        classes.append(
            EquivClass(
                omega=omega,
                multiplicity=c["multiplicity"],
                obj=tuple(np.array(v) for v in c["obj"]),
                obj_y=np.array(c["obj_y"]),
                coupling_coeffs=tuple(
                    tuple(np.array(v) for v in row) for row in c["coupling_coeffs"]
                ),
            )
        )
    return ProblemSpec(
        classes=tuple(classes),
        global_rows=tuple((g["sense"], g["rhs"]) for g in doc["global_rows"]),
        name=doc["name"],
    )
