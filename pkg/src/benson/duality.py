"""Geometric duality machinery.

A dual frame fixes the nonsingular matrix built from q-1 auxiliary columns
and the cone's interior direction c. It induces the affine weight map
w(t), the bilinear-affine coupling phi(y, t) = w(t).y - t_q, and the two
hyperplane families that translate supporting data between objective space
(the upper image lives there) and dual space (the lower image). Point sets
on either side convert into outer approximations of the other side by one
halfspace per point, plus vertical cone-feasibility constraints on the dual
side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cones import OrderingCone
from .errors import ConeError, DualUnboundedError, ZeroNormalError
from .polyhedra import HalfSpace, HRep
from .problem import CvopProblem
from .scalarize import weighted_sum_program

__all__ = ["DualFrame", "primal_outer_from_dual", "dual_outer_from_primal"]


@dataclass(frozen=True)
class DualFrame:
    """Frame matrix (c^1, ..., c^{q-1}, c) and its inverse."""

    matrix: np.ndarray
    inverse: np.ndarray
    c: np.ndarray

    @classmethod
    def for_cone(cls, cone: OrderingCone, columns=None) -> "DualFrame":
        """Build a frame for the cone's interior point.

        ``columns`` supplies the q-1 auxiliary columns; the default takes
        standard basis vectors, skipping the index where |c| is largest so
        the matrix stays away from singularity.
        """
        c = cone.c
        q = cone.q
        if columns is None:
            skip = int(np.argmax(np.abs(c)))
            cols = [np.eye(q)[:, i] for i in range(q) if i != skip]
            columns = np.column_stack(cols)
        else:
            columns = np.asarray(columns, dtype=float)
            if columns.shape != (q, q - 1):
                raise ConeError(
                    f"frame columns must form a {q}x{q - 1} block")
        T = np.column_stack([columns, c])
        try:
            T_inv = np.linalg.inv(T)
        except np.linalg.LinAlgError:
            raise ConeError("frame columns and c are linearly dependent")
        if np.max(np.abs(T @ T_inv - np.eye(q))) > 1e-10:
            raise ConeError("frame matrix is numerically singular")
        return cls(matrix=T, inverse=T_inv, c=c)

    @property
    def q(self) -> int:
        return self.matrix.shape[0]

    # Split of the affine weight map: w(t) = W t[:q-1] + w0, independent
    # of t_q by construction.
    @property
    def weight_matrix(self) -> np.ndarray:
        return self.inverse.T[:, : self.q - 1]

    @property
    def weight_offset(self) -> np.ndarray:
        return self.inverse.T[:, self.q - 1]

    def weight(self, t) -> np.ndarray:
        """w(t), the scalarization weight encoded by a dual point."""
        t = np.asarray(t, dtype=float)
        return self.weight_matrix @ t[: self.q - 1] + self.weight_offset

    def dual_point(self, w) -> np.ndarray:
        """T'w; for c-normalized w this is the dual point with t_q = 1."""
        return self.matrix.T @ np.asarray(w, dtype=float)

    def coupling(self, y, t) -> float:
        """phi(y, t) = w(t).y - t_q; zero exactly on the dual pair's
        hyperplane, nonnegative across the upper/lower image pairing."""
        y = np.asarray(y, dtype=float)
        t = np.asarray(t, dtype=float)
        return float(self.weight(t) @ y - t[self.q - 1])

    # ---------------------------------------------------------------- cuts

    def halfspace_in_objective_space(self, t) -> HalfSpace:
        """{y : phi(y, t) >= 0} as a halfspace in objective space."""
        t = np.asarray(t, dtype=float)
        w = self.weight(t)
        if np.linalg.norm(w) <= 1e-12:
            raise ZeroNormalError("dual point encodes a zero weight")
        return HalfSpace(normal=w, offset=float(t[self.q - 1]))

    def halfspace_in_dual_space(self, y) -> HalfSpace:
        """{t : phi(y, t) >= 0} as a halfspace in dual space.

        The last normal coordinate is -1 before scaling, so this family is
        never vertical in exact arithmetic; numeric verticality (|y| huge)
        is the caller's diagnostic.
        """
        y = np.asarray(y, dtype=float)
        normal = np.append(self.weight_matrix.T @ y, -1.0)
        offset = -float(self.weight_offset @ y)
        return HalfSpace(normal=normal, offset=offset)

    def recession_halfspace_in_dual_space(self, direction) -> HalfSpace | None:
        """Vertical constraint w(t).d >= 0 from a primal recession ray d.

        Returns None when the weight map is constant along d and the
        constraint holds identically.
        """
        d = np.asarray(direction, dtype=float)
        lin = self.weight_matrix.T @ d
        offset = -float(self.weight_offset @ d)
        if np.linalg.norm(lin) <= 1e-12:
            if offset > 1e-12:
                raise ZeroNormalError(
                    "recession direction makes the dual strip empty")
            return None
        return HalfSpace(normal=np.append(lin, 0.0), offset=offset)

    def halfspace_from_dual_ray(self, ray) -> HalfSpace | None:
        """Objective-space constraint contributed by a dual recession ray.

        Rays along -e^q contribute nothing (the trivial inequality); any
        other ray r yields {y : (W' r').y >= r_q} through the linear part
        of the weight map.
        """
        r = np.asarray(ray, dtype=float)
        normal = self.weight_matrix @ r[: self.q - 1]
        if np.linalg.norm(normal) <= 1e-10:
            if r[self.q - 1] > 1e-10:
                raise ZeroNormalError(
                    "dual ray with positive last coordinate and zero weight")
            return None
        return HalfSpace(normal=normal, offset=float(r[self.q - 1]))

    def vertical_halfspaces(self, cone: OrderingCone) -> list[HalfSpace]:
        """Dual feasibility strip: one vertical row per cone generator."""
        out = []
        for i in range(cone.Y.shape[1]):
            h = self.recession_halfspace_in_dual_space(cone.Y[:, i])
            if h is not None:
                out.append(h)
        return out

    def is_vertical(self, h: HalfSpace, tol: float) -> bool:
        unit, _ = h.scaled_unit()
        return abs(unit[self.q - 1]) <= tol

    # ------------------------------------------------------- dual objective

    def dual_objective(self, prob: CvopProblem, t, tolerances=None,
                       solve_fn=None) -> np.ndarray:
        """Dual map value (t_1, ..., t_{q-1}, inf_x w(t).G(x)).

        The last coordinate is the weighted-sum optimum for the weight
        encoded by t. Unbounded scalarizations surface as
        :class:`DualUnboundedError`.
        """
        from .scalar_solver import Status, solve as default_solve

        t = np.asarray(t, dtype=float)
        w = self.weight(t)
        prog = weighted_sum_program(prob, w)
        solver = solve_fn or default_solve
        sol = solver(prog, tolerances)
        if sol.status is Status.UNBOUNDED:
            raise DualUnboundedError(
                "weighted-sum scalarization unbounded at this dual point")
        return np.append(t[: self.q - 1], sol.value)


def primal_outer_from_dual(frame: DualFrame, dual_points) -> HRep:
    """Objective-space outer approximation from dual map values.

    One halfspace {y : w(t).y >= t_q} per point; a point encoding a zero
    weight raises :class:`ZeroNormalError`.
    """
    pts = [np.asarray(p, dtype=float) for p in dual_points]
    if not pts:
        raise ValueError("need at least one dual point")
    return HRep(tuple(frame.halfspace_in_objective_space(p) for p in pts))


def dual_outer_from_primal(frame: DualFrame, cone: OrderingCone,
                           image_points) -> HRep:
    """Dual-space outer approximation from objective-space points.

    Vertical halfspaces keep w(t) inside the dual cone; each image point
    contributes one non-vertical halfspace through the coupling. With no
    points the result is the bare feasibility strip (not pointed, so not
    enumerable as is).
    """
    pts = [np.asarray(p, dtype=float) for p in image_points]
    rows = frame.vertical_halfspaces(cone)
    rows.extend(frame.halfspace_in_dual_space(p) for p in pts)
    return HRep(tuple(rows))
