"""Convex vector optimization problem container."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cones import OrderingCone
from .errors import ConeError, DomainError
from .expressions import Expr

__all__ = ["CvopProblem"]


@dataclass
class CvopProblem:
    """Minimize a cone-convex objective map subject to convex constraints.

    ``objectives`` has one expression per objective component (q >= 2);
    ``constraints`` are componentwise rows g_i(x) <= 0 (any polyhedral
    constraint cone has already been reduced to this form). The variable
    domain is a box; unbounded sides are +-inf. Immutable after load.
    """

    n: int
    objectives: list[Expr]
    constraints: list[Expr]
    cone: OrderingCone
    lower: np.ndarray = None
    upper: np.ndarray = None
    frame_columns: np.ndarray | None = None  # optional q x (q-1) block
    name: str = ""
    _smooth: bool = field(init=False, repr=False, default=True)

    def __post_init__(self):
        if self.q < 2:
            raise ConeError("a vector problem needs at least two objectives")
        if self.cone.q != self.q:
            raise ConeError("ordering cone dimension != objective count")
        self.lower = (np.full(self.n, -np.inf) if self.lower is None
                      else np.asarray(self.lower, dtype=float))
        self.upper = (np.full(self.n, np.inf) if self.upper is None
                      else np.asarray(self.upper, dtype=float))
        if self.lower.shape != (self.n,) or self.upper.shape != (self.n,):
            raise ConeError("box bounds must have one entry per variable")
        if np.any(self.lower > self.upper):
            raise ConeError("empty variable box (lower > upper)")
        exprs = list(self.objectives) + list(self.constraints)
        self._smooth = all(e.is_smooth for e in exprs)
        for e in exprs:
            if e.max_var_index() >= self.n:
                raise ConeError("expression references an unknown variable")

    @property
    def q(self) -> int:
        return len(self.objectives)

    @property
    def m(self) -> int:
        return len(self.constraints)

    @property
    def is_smooth(self) -> bool:
        return self._smooth

    def check_domain(self, x: np.ndarray, tol: float = 1e-9) -> None:
        x = np.asarray(x, dtype=float)
        if (np.any(x < self.lower - tol) or np.any(x > self.upper + tol)):
            raise DomainError("point lies outside the variable box")

    def objective_values(self, x: np.ndarray) -> np.ndarray:
        self.check_domain(x)
        x = np.asarray(x, dtype=float)
        return np.array([g.value(x) for g in self.objectives])

    def constraint_values(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.m == 0:
            return np.zeros(0)
        return np.array([g.value(x) for g in self.constraints])

    def is_feasible(self, x: np.ndarray, tol: float = 1e-8) -> bool:
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lower - tol) or np.any(x > self.upper + tol):
            return False
        if self.m == 0:
            return True
        vals = self.constraint_values(x)
        scale = np.maximum(1.0, np.abs(vals))
        return bool(np.all(vals <= tol * scale))

    def box_center(self) -> np.ndarray:
        """A finite starting point inside the box."""
        lo = np.where(np.isfinite(self.lower), self.lower, 0.0)
        hi = np.where(np.isfinite(self.upper), self.upper, 0.0)
        mid = np.zeros(self.n)
        both = np.isfinite(self.lower) & np.isfinite(self.upper)
        mid[both] = 0.5 * (self.lower[both] + self.upper[both])
        only_lo = np.isfinite(self.lower) & ~np.isfinite(self.upper)
        mid[only_lo] = lo[only_lo] + 1.0
        only_hi = ~np.isfinite(self.lower) & np.isfinite(self.upper)
        mid[only_hi] = hi[only_hi] - 1.0
        return mid
