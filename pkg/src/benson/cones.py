"""Polyhedral ordering cones and constraint-cone reduction."""

from __future__ import annotations

import numpy as np

from .errors import ConeError, ConvexityError
from .expressions import Expr, Sum, signed_combination

__all__ = ["OrderingCone", "reduce_constraint_cone"]


class OrderingCone:
    """Solid pointed polyhedral cone in objective space.

    Held by its generator matrix Y (columns generate the cone), dual
    generator matrix Z (columns generate the dual cone) and an interior
    point c. On construction each dual generator z is rescaled so that
    c.z = 1, which anchors all scalarization offsets used downstream.
    """

    def __init__(self, generators, dual_generators, interior_point):
        Y = np.asarray(generators, dtype=float)
        Z = np.asarray(dual_generators, dtype=float)
        c = np.asarray(interior_point, dtype=float)
        if Y.ndim != 2 or Z.ndim != 2:
            raise ConeError("generator matrices must be two-dimensional")
        q = Y.shape[0]
        if Z.shape[0] != q or c.shape != (q,):
            raise ConeError("cone data dimensions disagree")
        if np.linalg.matrix_rank(Y, tol=1e-10) != q:
            raise ConeError("cone is not solid: generators do not span")
        if np.linalg.matrix_rank(Z, tol=1e-10) != q:
            raise ConeError("cone is not pointed: dual generators do not span")
        sc = Z.T @ c
        if np.any(sc <= 1e-12):
            raise ConeError(
                "interior point fails Z'c > 0: not interior to the cone")
        Z = Z / sc[None, :]
        if np.min(Z.T @ Y) < -1e-9:
            raise ConeError("Z'Y has negative entries: Z does not generate "
                            "the dual cone of cone(Y)")
        self.Y = Y
        self.Z = Z
        self.c = c
        self.q = q

    @classmethod
    def orthant(cls, q: int, interior_point=None) -> "OrderingCone":
        c = np.ones(q) if interior_point is None else interior_point
        eye = np.eye(q)
        return cls(eye, eye, c)

    @property
    def num_generators(self) -> int:
        return self.Y.shape[1]

    @property
    def num_dual_generators(self) -> int:
        return self.Z.shape[1]

    def contains(self, y, tol: float = 1e-9) -> bool:
        y = np.asarray(y, dtype=float)
        scale = max(1.0, float(np.max(np.abs(y))))
        return bool(np.all(self.Z.T @ y >= -tol * scale))

    def strictly_contains(self, y, tol: float = 1e-9) -> bool:
        y = np.asarray(y, dtype=float)
        scale = max(1.0, float(np.max(np.abs(y))))
        return bool(np.all(self.Z.T @ y > tol * scale))

    def dual_contains(self, w, tol: float = 1e-9) -> bool:
        w = np.asarray(w, dtype=float)
        scale = max(1.0, float(np.max(np.abs(w))))
        return bool(np.all(self.Y.T @ w >= -tol * scale))

    def dual_on_boundary(self, w, tol: float = 1e-9) -> bool:
        """True when w lies on the boundary of the dual cone."""
        w = np.asarray(w, dtype=float)
        scale = max(1.0, float(np.max(np.abs(w))))
        prods = self.Y.T @ w
        return bool(np.all(prods >= -tol * scale)
                    and np.min(prods) <= tol * scale)

    def dominates(self, a, b, tol: float = 0.0) -> bool:
        """a <=_C b, i.e. b - a lies in the cone."""
        return self.contains(np.asarray(b) - np.asarray(a), max(tol, 1e-9))


def reduce_constraint_cone(constraints: list[Expr],
                           dual_generators) -> list[Expr]:
    """Rewrite ``g(x) <=_D 0`` as componentwise rows ``d_i . g(x) <= 0``.

    The columns d_i of ``dual_generators`` must generate the dual cone of
    D. A combination with a negative weight on a nonlinear component is
    rejected, since it would leave the convex whitelist.
    """
    D = np.asarray(dual_generators, dtype=float)
    if D.ndim != 2 or D.shape[0] != len(constraints):
        raise ConeError(
            "constraint-cone dual generators must have one row per "
            "constraint component")
    reduced: list[Expr] = []
    identity_like = (D.shape[0] == D.shape[1]
                     and np.allclose(D, np.eye(D.shape[0])))
    if identity_like:
        return list(constraints)
    for i in range(D.shape[1]):
        d = D[:, i]
        for w, g in zip(d, constraints):
            if w < -1e-12 and not g.is_affine:
                raise ConvexityError(
                    "constraint-cone reduction puts a negative weight on a "
                    f"nonlinear component (column {i})")
        if all(g.is_affine for g in constraints):
            reduced.append(signed_combination(d, constraints))
        else:
            reduced.append(Sum(list(constraints), d))
    return reduced
