"""Scalarizations of a vector problem.

Two families feed the approximation engines: weighted sums ``min w.G(x)``
over the feasible set (weights from the dual ordering cone), and boundary
projection programs ``min z`` with ``G(x) <= z*c + v`` in the cone order,
which measure how far a reference point v sits below the upper image along
the interior direction c. The Lagrangian duals of both never get solved
separately; their optimal values come from the multipliers of the primal
solves, so a single scalar solve per engine step suffices. The helper
:func:`lagrangian_dual_value` evaluates the weighted-sum dual objective at
given multipliers for validation purposes only.
"""

from __future__ import annotations

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import ConeMembershipError
from .expressions import Affine, signed_combination
from .problem import CvopProblem
from .scalar_solver import ScalarProgram, Status, solve

__all__ = [
    "validate_weight",
    "weighted_sum_program",
    "projection_program",
    "lagrangian_dual_value",
]


def validate_weight(prob: CvopProblem, w, tol: float = 1e-9) -> np.ndarray:
    """Check w is a usable dual-cone weight (nonzero, Y'w >= 0)."""
    w = np.asarray(w, dtype=float)
    if w.shape != (prob.q,):
        raise ConeMembershipError("weight has wrong dimension")
    if np.linalg.norm(w) <= DEFAULT_TOLERANCES.zero:
        raise ConeMembershipError("zero weight vector is not allowed")
    if not prob.cone.dual_contains(w, tol):
        raise ConeMembershipError(
            "weight lies outside the dual ordering cone")
    return w


def weighted_sum_program(prob: CvopProblem, w,
                         tol: float = 1e-9) -> ScalarProgram:
    """``min w.G(x)`` over the feasible set, for w in the dual cone.

    ``tol`` loosens the cone membership check; dual-space vertices carry
    enumeration noise, so engine callers pass a larger slack than the
    default.
    """
    w = validate_weight(prob, w, tol)
    objective = signed_combination(w, prob.objectives)
    return ScalarProgram(
        objective=objective,
        constraints=list(prob.constraints),
        n=prob.n,
        lower=prob.lower.copy(),
        upper=prob.upper.copy(),
        meta={"kind": "weighted_sum", "w": w},
    )


def projection_program(prob: CvopProblem, v) -> ScalarProgram:
    """``min z`` s.t. ``g(x) <= 0`` and ``Z'(G(x) - z c - v) <= 0``.

    Variables are (x, z) with z appended last. The cone block contributes
    one row per dual generator; since each generator is normalized against
    c, the z coefficient in every cone row is exactly -1. ``meta['split']``
    records where the cone block starts, for multiplier splitting.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (prob.q,):
        raise ValueError("reference point has wrong dimension")
    n = prob.n
    z_col = np.zeros(n + 1)
    z_col[n] = 1.0
    rows = list(prob.constraints)
    Z = prob.cone.Z
    for j in range(Z.shape[1]):
        zj = Z[:, j]
        rows.append(signed_combination(
            np.append(zj, 1.0),
            list(prob.objectives) + [Affine(-z_col, -float(zj @ v))],
        ))
    lower = np.append(prob.lower, -np.inf)
    upper = np.append(prob.upper, np.inf)
    return ScalarProgram(
        objective=Affine(z_col),
        constraints=rows,
        n=n + 1,
        lower=lower,
        upper=upper,
        meta={"kind": "projection", "cone": prob.cone, "split": prob.m,
              "reference": v},
    )


def lagrangian_dual_value(prob: CvopProblem, w, u,
                          tolerances: Tolerances | None = None) -> float:
    """Weighted-sum dual objective: ``inf_x [w.G(x) + u.g(x)]`` over the box.

    Used to validate strong duality against multipliers recovered from the
    primal solve. Returns ``-inf`` when the Lagrangian is unbounded below.
    """
    w = validate_weight(prob, w)
    u = np.asarray(u, dtype=float)
    if np.any(u < -1e-9):
        raise ValueError("dual multipliers must be nonnegative")
    terms = list(prob.objectives) + list(prob.constraints)
    weights = np.concatenate([w, np.maximum(u, 0.0)])
    inner = ScalarProgram(
        objective=signed_combination(weights, terms),
        constraints=[],
        n=prob.n,
        lower=prob.lower.copy(),
        upper=prob.upper.copy(),
    )
    sol = solve(inner, tolerances=tolerances)
    if sol.status is Status.UNBOUNDED:
        return -np.inf
    return sol.value
