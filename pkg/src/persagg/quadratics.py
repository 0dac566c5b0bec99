"""Separable convex quadratic functions and box-bounded block sets.

Every constraint function in this package has the form
``sum_j q_j x_j^2 + sum_j b_j x_j + c`` with ``q_j >= 0``, which keeps
min/max over an interval box computable coordinate by coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ConvexQuadratic:
    """Diagonal convex quadratic plus linear term on one variable block."""

    dim: int
    quad: np.ndarray
    lin: np.ndarray
    const_term: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "quad", np.asarray(self.quad, dtype=float))
        object.__setattr__(self, "lin", np.asarray(self.lin, dtype=float))
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.quad.shape != (self.dim,) or self.lin.shape != (self.dim,):
            raise ValueError("coefficient vectors must have length dim")
        if np.any(self.quad < 0):
            raise ValueError("negative curvature: quad entries must be >= 0")

    @property
    def is_linear(self) -> bool:
        return bool(np.all(self.quad == 0.0))

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(self.quad @ (x * x) + self.lin @ x + self.const_term)

    def box_min(self, lower, upper) -> float:
        """Exact minimum over a box; vertex -b/(2q) clipped per coordinate."""
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        total = self.const_term
        for q, b, lo, up in zip(self.quad, self.lin, lower, upper):
            if q > 0.0:
                xs = min(max(-b / (2.0 * q), lo), up)
            else:
                xs = lo if b >= 0.0 else up
            total += q * xs * xs + b * xs
        return float(total)

    def box_max(self, lower, upper) -> float:
        """Exact maximum over a box; attained at an interval endpoint."""
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        total = self.const_term
        for q, b, lo, up in zip(self.quad, self.lin, lower, upper):
            total += max(q * lo * lo + b * lo, q * up * up + b * up)
        return float(total)


def quad1(q: float, b: float, c: float = 0.0) -> ConvexQuadratic:
    """Univariate convenience constructor q*x^2 + b*x + c."""
    return ConvexQuadratic(1, np.array([q]), np.array([b]), c)


@dataclass(frozen=True)
class BlockSet:
    """Convex set over one block: quadratic rows intersected with a finite box.

    A block set with ``lower == upper == 0`` and no rows is the zero
    singleton used for the all-off state.
    """

    dim: int
    rows: tuple = ()
    lower: np.ndarray = None
    upper: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        lo = np.zeros(self.dim) if self.lower is None else np.asarray(self.lower, dtype=float)
        up = np.zeros(self.dim) if self.upper is None else np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if lo.shape != (self.dim,) or up.shape != (self.dim,):
            raise ValueError("bound vectors must have length dim")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(up))):
            raise ValueError("block sets require finite box bounds")
        if np.any(lo > up):
            raise ValueError("lower bound exceeds upper bound")
        for func, _ in self.rows:
            if func.dim != self.dim:
                raise ValueError("row function dim mismatch")

    @classmethod
    def zero(cls, dim: int) -> "BlockSet":
        return cls(dim=dim, rows=(), lower=np.zeros(dim), upper=np.zeros(dim))

    @property
    def is_zero_singleton(self) -> bool:
        return (
            not self.rows
            and bool(np.all(self.lower == 0.0))
            and bool(np.all(self.upper == 0.0))
        )

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lower - tol) or np.any(x > self.upper + tol):
            return False
        return all(func.value(x) <= rhs + tol for func, rhs in self.rows)

    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)
