"""A-posteriori certification of an approximation run.

Every check is report-only and carries a signed margin (nonnegative means
pass). The sandwich checks are linear-programming memberships against the
finite solution sets, the minimality check is a feasible-sampling surrogate
and the achieved error level is recomputed with fresh projection solves, so
a reloaded result can be re-certified without rerunning the engine.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .config import DEFAULT_TOLERANCES
from .duality import DualFrame
from .engine import EpsilonSolution
from .problem import CvopProblem
from .scalar_solver import solve_with_cone_duals
from .scalarize import projection_program

__all__ = ["CheckResult", "CertificationReport", "certify", "sample_feasible"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclass
class CertificationReport:
    epsilon: float
    effective_epsilon: float
    achieved_epsilon: float | None
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "effective_epsilon": self.effective_epsilon,
            "achieved_epsilon": self.achieved_epsilon,
            "all_passed": self.all_passed,
            "checks": [
                {"name": c.name, "passed": bool(c.passed),
                 "margin": float(c.margin), "detail": c.detail}
                for c in self.checks
            ],
        }


def _membership_upper(point, images, cone, shift) -> float:
    """Largest slack with point + shift*c inside conv(images) + cone.

    LP over simplex weights; the cone side is expressed through the dual
    generators, so no explicit cone multipliers are needed.
    """
    G = np.asarray(images, dtype=float)
    Z = cone.Z
    target = np.asarray(point, dtype=float) + shift * cone.c
    k = G.shape[0]
    # variables (lambda, delta), maximize delta;
    # row j reads:  -(G @ z_j)' lambda + delta <= z_j' target
    A_ub = np.column_stack([-(G @ Z).T, np.ones(Z.shape[1])])
    b_ub = Z.T @ target
    A_eq = np.concatenate([np.ones(k), [0.0]])[None, :]
    res = linprog(
        c=np.concatenate([np.zeros(k), [-1.0]]),
        A_ub=A_ub, b_ub=b_ub,
        A_eq=A_eq, b_eq=[1.0],
        bounds=[(0, None)] * k + [(None, None)],
        method="highs",
    )
    if not res.success:
        return -np.inf
    return float(-res.fun)


def _membership_lower(point, values, shift) -> float:
    """Largest slack with point - shift*e_q inside conv(values) - K."""
    V = np.asarray(values, dtype=float)
    p = np.asarray(point, dtype=float)
    k, q = V.shape
    A_eq = np.column_stack([V[:, : q - 1].T, np.zeros(q - 1)])
    A_eq = np.vstack([A_eq, np.concatenate([np.ones(k), [0.0]])])
    b_eq = np.concatenate([p[: q - 1], [1.0]])
    A_ub = np.concatenate([-V[:, q - 1], [1.0]])[None, :]
    b_ub = [shift - p[q - 1]]
    res = linprog(
        c=np.concatenate([np.zeros(k), [-1.0]]),
        A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
        bounds=[(0, None)] * k + [(None, None)],
        method="highs",
    )
    if not res.success:
        return -np.inf
    return float(-res.fun)


def sample_feasible(prob: CvopProblem, rng: np.random.Generator,
                    count: int, anchors=None) -> list[np.ndarray]:
    """Draw feasible points by jittered mixing of known feasible anchors
    plus box sampling, with rejection."""
    anchors = [np.asarray(a, dtype=float) for a in (anchors or [])]
    out: list[np.ndarray] = []
    spread = 1.0
    if len(anchors) >= 2:
        A = np.array(anchors)
        spread = max(1e-3, float(np.max(A.max(axis=0) - A.min(axis=0))))
    lo = np.where(np.isfinite(prob.lower), prob.lower, -3.0)
    hi = np.where(np.isfinite(prob.upper), prob.upper, 3.0)
    attempts = 0
    while len(out) < count and attempts < 60 * count:
        attempts += 1
        if anchors and rng.random() < 0.7:
            wts = rng.dirichlet(np.ones(len(anchors)))
            x = sum(w * a for w, a in zip(wts, anchors))
            x = x + 0.05 * spread * rng.standard_normal(prob.n)
        else:
            x = lo + (hi - lo) * rng.random(prob.n)
        if prob.is_feasible(x, tol=1e-10):
            out.append(np.asarray(x))
    return out


def certify(sol: EpsilonSolution, prob: CvopProblem, frame: DualFrame,
            seed: int = 0, samples: int = 200,
            recompute_gaps: bool = True) -> CertificationReport:
    """Run the five certification checks on a finished (or partial) run.

    Partial runs are certified at the error level they actually achieved.
    """
    tols = DEFAULT_TOLERANCES
    eps = sol.epsilon
    eff = max(eps, sol.achieved_epsilon) if np.isfinite(
        sol.achieved_epsilon) else eps
    report = CertificationReport(epsilon=eps, effective_epsilon=eff,
                                 achieved_epsilon=None)
    cone = prob.cone
    images = sol.images
    values = sol.dual_values
    slack = 10 * tols.feas

    # (a) outer vertices sit inside the eps-shifted inner approximation
    margins = []
    for v in sol.outer_primal.vertices():
        margins.append(_membership_upper(v, images, cone, eff))
    m = float(min(margins)) if margins else np.inf
    report.checks.append(CheckResult(
        "outer_primal_in_shifted_inner", m >= -slack * max(1.0, eff), m,
        f"{len(margins)} outer vertices against {len(images)} images"))

    # (b) every recorded image lies in the outer approximation
    margins = [-sol.outer_primal.max_violation(y) for y in images]
    m = float(min(margins)) if margins else np.inf
    report.checks.append(CheckResult(
        "images_in_outer_primal", m >= -slack, m,
        f"{len(margins)} images"))

    # (c) dual sandwich: outer dual vertices inside the eps-lifted inner
    # dual approximation, and inner dual inside outer dual
    margins = []
    for t in sol.outer_dual.vertices():
        margins.append(_membership_lower(t, values, eff))
    m1 = float(min(margins)) if margins else np.inf
    margins = [-sol.outer_dual.max_violation(t)
               for t in sol.inner_dual.vertices()]
    m2 = float(min(margins)) if margins else np.inf
    m = min(m1, m2)
    report.checks.append(CheckResult(
        "dual_sandwich", m >= -slack * max(1.0, eff), m,
        f"lift margin {m1:.3e}, nesting margin {m2:.3e}"))

    # (d) weak minimality spot check by feasible sampling
    rng = np.random.default_rng(seed)
    anchors = [r.x for r in sol.primal_points]
    pts = sample_feasible(prob, rng, samples, anchors)
    worst = np.inf
    wm_tol = 1e-6
    for r in sol.primal_points[:12]:
        target = r.image - wm_tol * cone.c
        for x in pts:
            diff = target - prob.objective_values(x)
            # diff strictly inside the cone would contradict weak minimality
            margin = -float(np.min(cone.Z.T @ diff))
            worst = min(worst, margin)
    report.checks.append(CheckResult(
        "weak_minimizer_spot_check", worst >= -1e-9,
        worst if np.isfinite(worst) else np.inf,
        f"{len(pts)} feasible samples"))

    # (e) achieved error level, recomputed with fresh projection solves
    if recompute_gaps:
        gaps = []
        for v in sol.outer_primal.vertices():
            psol = solve_with_cone_duals(projection_program(prob, v))
            if psol.base.optimal:
                gaps.append(psol.gap)
        achieved = float(max(gaps)) if gaps else np.nan
        report.achieved_epsilon = achieved
        ok = np.isfinite(achieved) and achieved <= eff + slack * max(1.0, eff)
        report.checks.append(CheckResult(
            "achieved_epsilon", bool(ok), eff - achieved,
            f"max fresh gap {achieved:.6g} vs level {eff:.6g}"))
    return report
