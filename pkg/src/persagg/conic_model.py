"""Compiled conic model: linear rows, rotated second-order cones, boxes.

Serialization is deterministic and bit-exact: fixed variable order,
17-significant-digit decimal floats, LF line endings. ``parse_conic_text``
round-trips ``emit_conic_text`` exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

LE = "L"  # row sense <=
EQ = "E"  # row sense ==

_INF = float("inf")


def _fmt(x: float) -> str:
    if x == _INF:
        return "inf"
    if x == -_INF:
        return "-inf"
    return format(float(x), ".17g")


def _parse_float(tok: str) -> float:
    return float(tok)


@dataclass
class Row:
    coeffs: tuple  # ((var_index, coefficient), ...)
    sense: str  # LE or EQ
    rhs: float

    def activity(self, x) -> float:
        return float(sum(c * x[i] for i, c in self.coeffs))


@dataclass
class ConicModel:
    """Mutable while being built by a compiler; treated as frozen afterwards."""

    name: str = "model"
    lower: list = field(default_factory=list)
    upper: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    cones: list = field(default_factory=list)  # tuples (u, v, z1, ..., zm)
    integer: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)  # var index -> coefficient
    obj_const: float = 0.0
    provenance: list = field(default_factory=list)

    @property
    def num_vars(self) -> int:
        return len(self.lower)

    # -- builder interface -------------------------------------------------

    def add_var(self, lo: float, up: float, integer: bool = False, tag: str = "v") -> int:
        if integer and not (np.isfinite(lo) and np.isfinite(up)):
            raise ValueError("integer variables require finite bounds")
        idx = len(self.lower)
        self.lower.append(float(lo))
        self.upper.append(float(up))
        self.provenance.append(tag)
        if integer:
            self.integer.append(idx)
        return idx

    def add_row(self, coeffs, sense: str, rhs: float) -> int:
        coeffs = tuple((int(i), float(c)) for i, c in coeffs if c != 0.0)
        for i, _ in coeffs:
            if not 0 <= i < self.num_vars:
                raise ValueError("row references invalid variable index")
        if sense not in (LE, EQ):
            raise ValueError(f"unknown row sense {sense!r}")
        self.rows.append(Row(coeffs, sense, float(rhs)))
        return len(self.rows) - 1

    def add_rsoc(self, u: int, v: int, zs) -> int:
        members = (int(u), int(v), *(int(z) for z in zs))
        for i in members:
            if not 0 <= i < self.num_vars:
                raise ValueError("cone references invalid variable index")
        self.cones.append(members)
        return len(self.cones) - 1

    def add_objective(self, idx: int, coef: float):
        if coef != 0.0:
            self.objective[int(idx)] = self.objective.get(int(idx), 0.0) + float(coef)

    def fixed_one(self) -> int:
        """Variable pinned to 1, shared across unscaled cone encodings."""
        for i, tag in enumerate(self.provenance):
            if tag == "const.one":
                return i
        return self.add_var(1.0, 1.0, tag="const.one")

    # -- queries -----------------------------------------------------------

    def objective_value(self, x) -> float:
        return float(sum(c * x[i] for i, c in self.objective.items()) + self.obj_const)

    def copy_with_bounds(self, lower, upper) -> "ConicModel":
        m = ConicModel(
            name=self.name,
            lower=list(lower),
            upper=list(upper),
            rows=self.rows,
            cones=self.cones,
            integer=self.integer,
            objective=self.objective,
            obj_const=self.obj_const,
            provenance=self.provenance,
        )
        return m

    def vars_tagged(self, prefix: str) -> list:
        return [i for i, t in enumerate(self.provenance) if t.startswith(prefix)]

    def structurally_equal(self, other: "ConicModel") -> bool:
        return emit_conic_text(self) == emit_conic_text(other)


# -- conic-text format -----------------------------------------------------
#
# Line-oriented grammar (LF endings, one record per line):
#   CONICTEXT 1
#   NAME <name>                         (omitted for the default name)
#   VAR <idx> <lo> <up> <C|I> <tag>
#   ROW <L|E> <rhs> <idx>:<coef> ...
#   RSOC <n>: <u> <v> <z...>            (n = number of cone members)
#   OBJ <const> <idx>:<coef> ...
#   END


def emit_conic_text(model: ConicModel) -> bytes:
    out = ["CONICTEXT 1"]
    if model.name != "model":
        out.append(f"NAME {model.name}")
    integer = set(model.integer)
    for i in range(model.num_vars):
        kind = "I" if i in integer else "C"
        out.append(
            f"VAR {i} {_fmt(model.lower[i])} {_fmt(model.upper[i])} {kind} {model.provenance[i]}"
        )
    for row in model.rows:
        terms = " ".join(f"{i}:{_fmt(c)}" for i, c in row.coeffs)
        out.append(f"ROW {row.sense} {_fmt(row.rhs)} {terms}".rstrip())
    for cone in model.cones:
        out.append(f"RSOC {len(cone)}: " + " ".join(str(i) for i in cone))
    terms = " ".join(f"{i}:{_fmt(c)}" for i, c in sorted(model.objective.items()))
    out.append(f"OBJ {_fmt(model.obj_const)} {terms}".rstrip())
    out.append("END")
    return ("\n".join(out) + "\n").encode("ascii")


def parse_conic_text(data: bytes) -> ConicModel:
    lines = data.decode("ascii").splitlines()
    if not lines or lines[0] != "CONICTEXT 1":
        raise ValueError("missing CONICTEXT 1 header")
    model = ConicModel()
    seen_end = False
    for line in lines[1:]:
        if seen_end:
            raise ValueError("content after END")
        toks = line.split()
        if not toks:
            continue
        kind = toks[0]
        if kind == "NAME":
            model.name = line[len("NAME ") :]
        elif kind == "VAR":
            idx, lo, up, ck, tag = int(toks[1]), toks[2], toks[3], toks[4], toks[5]
            if idx != model.num_vars:
                raise ValueError("variable indices must be consecutive")
            model.add_var(_parse_float(lo), _parse_float(up), integer=(ck == "I"), tag=tag)
        elif kind == "ROW":
            coeffs = []
            for term in toks[3:]:
                i, c = term.split(":")
                coeffs.append((int(i), _parse_float(c)))
            model.add_row(coeffs, toks[1], _parse_float(toks[2]))
        elif kind == "RSOC":
            n = int(toks[1].rstrip(":"))
            members = [int(t) for t in toks[2:]]
            if len(members) != n:
                raise ValueError("RSOC member count mismatch")
            model.add_rsoc(members[0], members[1], members[2:])
        elif kind == "OBJ":
            model.obj_const = _parse_float(toks[1])
            for term in toks[2:]:
                i, c = term.split(":")
                model.add_objective(int(i), _parse_float(c))
        elif kind == "END":
            seen_end = True
        else:
            raise ValueError(f"unknown record {kind!r}")
    if not seen_end:
        raise ValueError("missing END record")
    return model


# -- JSON format -----------------------------------------------------------


def emit_json(model: ConicModel) -> bytes:
    doc = {
        "format_version": 1,
        "name": model.name,
        "lower": [_fmt(x) for x in model.lower],
        "upper": [_fmt(x) for x in model.upper],
        "rows": [
            {"sense": r.sense, "rhs": _fmt(r.rhs), "coeffs": [[i, _fmt(c)] for i, c in r.coeffs]}
            for r in model.rows
        ],
        "rsoc_cones": [list(c) for c in model.cones],
        "integer": list(model.integer),
        "objective": [[i, _fmt(c)] for i, c in sorted(model.objective.items())],
        "obj_const": _fmt(model.obj_const),
        "provenance": list(model.provenance),
    }
    return (json.dumps(doc, indent=1) + "\n").encode("ascii")


def parse_json(data: bytes) -> ConicModel:
    doc = json.loads(data.decode("ascii"))
    if doc.get("format_version") != 1:
        raise ValueError("unsupported format_version")
    model = ConicModel(name=doc["name"])
    integer = set(doc["integer"])
    for i, (lo, up) in enumerate(zip(doc["lower"], doc["upper"])):
        model.add_var(float(lo), float(up), integer=i in integer, tag=doc["provenance"][i])
    for r in doc["rows"]:
        model.add_row([(i, float(c)) for i, c in r["coeffs"]], r["sense"], float(r["rhs"]))
    for c in doc["rsoc_cones"]:
        model.add_rsoc(c[0], c[1], c[2:])
    for i, c in doc["objective"]:
        model.add_objective(i, float(c))
    model.obj_const = float(doc["obj_const"])
    return model


def emit_model(model: ConicModel, fmt: str) -> bytes:
    if fmt == "conic-text":
        return emit_conic_text(model)
    if fmt == "json":
        return emit_json(model)
    raise ValueError(f"unsupported format {fmt!r}")
