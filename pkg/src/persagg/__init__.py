"""Perspective reformulation toolkit for symmetric mixed-integer convex
programs: per-copy and aggregated conic compilations, an interior-point
relaxation backend, branch and bound, and brute-force reference checks."""

from .aggregation import compile_agg
from .branch_bound import MipParams, SolveResult, add_symmetry_cuts, solve_mip
from .conic_model import ConicModel, emit_model, parse_conic_text, parse_json
from .perspective import compile_p0, compile_per, perspective_value
from .problem import (
    EquivClass,
    OmegaSpec,
    ProblemSpec,
    spec_from_json,
    spec_to_json,
    validate_problem,
)
from .quadratics import BlockSet, ConvexQuadratic
from .solver import SolverTolerances, certify, solve_relaxation

__version__ = "0.1.0"

__all__ = [
    "BlockSet",
    "ConicModel",
    "ConvexQuadratic",
    "EquivClass",
    "MipParams",
    "OmegaSpec",
    "ProblemSpec",
    "SolveResult",
    "SolverTolerances",
    "add_symmetry_cuts",
    "certify",
    "compile_agg",
    "compile_p0",
    "compile_per",
    "emit_model",
    "parse_conic_text",
    "parse_json",
    "perspective_value",
    "solve_mip",
    "solve_relaxation",
    "spec_from_json",
    "spec_to_json",
    "validate_problem",
    "__version__",
]
