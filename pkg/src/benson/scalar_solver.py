"""Scalar convex programs with Lagrange multiplier recovery.

Smooth programs go straight to a primal-dual interior-point method with a
perturbed-KKT Newton direction, fraction-to-boundary steps and a residual
merit line search. Nondifferentiable programs (abs/max atoms, which the
expression whitelist keeps piecewise linear with affine arguments) are first
transcribed exactly into smooth form by epigraph lifting; the lifted rows
map one-to-one onto the original constraints, so multipliers transfer back
without approximation. Every reported optimum carries its KKT residual.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import WNormalizationError
from .expressions import Affine, Expr, Sum, Variable, lift_to_smooth

log = logging.getLogger("benson.solver")

__all__ = ["Status", "ScalarProgram", "ScalarSolution", "solve",
           "solve_with_cone_duals", "ConeDualSolution", "phase1"]


class Status(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass
class ScalarProgram:
    """min objective(x) s.t. constraints <= 0, lower <= x <= upper."""

    objective: Expr
    constraints: list[Expr]
    n: int
    lower: np.ndarray = None
    upper: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lower = (np.full(self.n, -np.inf) if self.lower is None
                      else np.asarray(self.lower, dtype=float))
        self.upper = (np.full(self.n, np.inf) if self.upper is None
                      else np.asarray(self.upper, dtype=float))

    @property
    def smooth(self) -> bool:
        return (self.objective.is_smooth
                and all(c.is_smooth for c in self.constraints))


@dataclass
class ScalarSolution:
    x: np.ndarray
    value: float
    multipliers: np.ndarray
    status: Status
    kkt_residual: float
    iterations: int = 0
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def _box_rows(lower, upper) -> list[Expr]:
    rows: list[Expr] = []
    n = len(lower)
    for i in range(n):
        if np.isfinite(lower[i]):
            e = np.zeros(i + 1)
            e[i] = -1.0
            rows.append(Affine(e, lower[i]))
        if np.isfinite(upper[i]):
            e = np.zeros(i + 1)
            e[i] = 1.0
            rows.append(Affine(e, -upper[i]))
    return rows


def _start_point(prog: ScalarProgram, x0) -> np.ndarray:
    if x0 is not None:
        x = np.array(x0, dtype=float)
        # nudge strictly inside the box so log-barrier style slacks stay sane
        lo, hi = prog.lower, prog.upper
        x = np.clip(x, np.where(np.isfinite(lo), lo + 1e-9, -np.inf),
                    np.where(np.isfinite(hi), hi - 1e-9, np.inf))
        return x
    lo, hi = prog.lower, prog.upper
    x = np.zeros(prog.n)
    both = np.isfinite(lo) & np.isfinite(hi)
    x[both] = 0.5 * (lo[both] + hi[both])
    x[np.isfinite(lo) & ~both] = lo[np.isfinite(lo) & ~both] + 1.0
    x[np.isfinite(hi) & ~both] = hi[np.isfinite(hi) & ~both] - 1.0
    return x


# --------------------------------------------------------------------------
# Newton on the perturbed KKT system.
# --------------------------------------------------------------------------

def _eval_all(objective, cons, x):
    with np.errstate(over="ignore", invalid="ignore"):
        f = objective.value(x)
        g = np.array([c.value(x) for c in cons]) if cons else np.zeros(0)
    return f, g


def _residuals(grad_f, J, g, s, mu, tau):
    r_d = grad_f + (J.T @ mu if len(mu) else 0.0)
    r_p = g + s
    r_c = mu * s - tau
    return r_d, r_p, r_c


def _merit(r_d, r_p, r_c) -> float:
    return float(r_d @ r_d + r_p @ r_p + r_c @ r_c)


def _interior_point(objective: Expr, cons: list[Expr], x0: np.ndarray,
                    tol_target: float, tols: Tolerances,
                    max_iter: int):
    """Infeasible-start primal-dual interior point. Returns a dict."""
    n = len(x0)
    m = len(cons)
    x = x0.copy()
    f, g = _eval_all(objective, cons, x)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        # walk the start toward the origin until everything evaluates
        for _ in range(60):
            x *= 0.5
            f, g = _eval_all(objective, cons, x)
            if np.isfinite(f) and np.all(np.isfinite(g)):
                break
        else:
            return dict(x=x, mu=np.ones(m), status=Status.NUMERICAL_FAILURE,
                        iterations=0, message="cannot evaluate start point")
    s = np.maximum(-g, 0.1) + 0.1
    mu = np.ones(m)
    tau = float(s @ mu / m)
    best = None
    rd_history: list[float] = []

    for it in range(max_iter):
        grad_f = objective.subgradient(x)
        J = np.array([c.subgradient(x) for c in cons])
        H = objective.hessian(x)
        for mu_i, c in zip(mu, cons):
            H = H + mu_i * c.hessian(x)

        with np.errstate(all="ignore"):
            r_d, r_p, r_c = _residuals(grad_f, J, g, s, mu, 0.0)
            gap = float(s @ mu / m)
        scale_d = 1.0 + float(np.max(np.abs(grad_f)))
        scale_p = 1.0 + float(np.max(np.abs(g)))
        # cap the value scale so huge |f| cannot fake convergence on an
        # unbounded descent
        scale_f = 1.0 + min(abs(f), 1e4)
        viol = float(np.max(g)) if m else 0.0
        rd_rel = float(np.max(np.abs(r_d))) / scale_d
        near_feasible = (viol <= tol_target * scale_p
                         and gap <= tol_target * scale_f)
        if rd_rel <= 10 * tol_target and near_feasible:
            return dict(x=x, mu=mu, status=Status.OPTIMAL, iterations=it,
                        message="converged")
        # stationarity stall with perfect feasibility/complementarity:
        # the infimum is approached but not attained (iterates drift);
        # report the value as optimal with a diagnostic
        rd_history.append(rd_rel)
        if (near_feasible and rd_rel <= 1e-6 and len(rd_history) >= 16
                and rd_history[-1] >= 0.8 * rd_history[-16]):
            return dict(x=x, mu=mu, status=Status.OPTIMAL, iterations=it,
                        message="stationarity stalled; optimum may not "
                                "be attained")

        if f < -tols.unbounded_value:
            return dict(x=x, mu=mu, status=Status.UNBOUNDED, iterations=it,
                        message="objective below -%g" % tols.unbounded_value)

        sigma = 0.2 if gap > 1e-6 else 0.05
        tau = sigma * gap
        with np.errstate(all="ignore"):
            r_d, r_p, r_c = _residuals(grad_f, J, g, s, mu, tau)
            D = mu / s
            M = H + J.T @ (D[:, None] * J)
            rhs = -r_d + J.T @ ((r_c - mu * r_p) / s)
        if not (np.all(np.isfinite(M)) and np.all(np.isfinite(rhs))):
            return dict(x=x, mu=mu, status=Status.NUMERICAL_FAILURE,
                        iterations=it, message="non-finite KKT system")
        reg = 1e-12 * (1.0 + abs(np.trace(M)) / n)
        dx = None
        for _ in range(6):
            try:
                dx = np.linalg.solve(M + reg * np.eye(n), rhs)
                break
            except np.linalg.LinAlgError:
                reg = max(reg * 1e3, 1e-10)
        if dx is None or not np.all(np.isfinite(dx)):
            return dict(x=x, mu=mu, status=Status.NUMERICAL_FAILURE,
                        iterations=it, message="singular KKT system")
        with np.errstate(all="ignore"):
            ds = -r_p - J @ dx
            dmu = (-r_c - mu * ds) / s

        alpha = 1.0
        neg = ds < 0
        if np.any(neg):
            alpha = min(alpha, float(np.min(-0.995 * s[neg] / ds[neg])))
        neg = dmu < 0
        if np.any(neg):
            alpha = min(alpha, float(np.min(-0.995 * mu[neg] / dmu[neg])))

        merit0 = _merit(r_d, r_p, r_c)
        accepted = False
        for _ in range(40):
            xt = x + alpha * dx
            st = s + alpha * ds
            mut = mu + alpha * dmu
            ft, gt = _eval_all(objective, cons, xt)
            if np.isfinite(ft) and np.all(np.isfinite(gt)) and np.all(st > 0):
                with np.errstate(all="ignore"):
                    grad_t = objective.subgradient(xt)
                    Jt = np.array([c.subgradient(xt) for c in cons])
                    rd_t, rp_t, rc_t = _residuals(grad_t, Jt, gt, st, mut,
                                                  tau)
                    m_t = _merit(rd_t, rp_t, rc_t)
                if np.isfinite(m_t) and m_t <= (1 - 0.01 * alpha) * merit0 + 1e-16:
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            best = dict(x=x, mu=mu, status=Status.NUMERICAL_FAILURE,
                        iterations=it, message="line search stalled")
            break
        x, s, mu, f, g = xt, st, mut, ft, gt

    if best is None:
        best = dict(x=x, mu=mu, status=Status.NUMERICAL_FAILURE,
                    iterations=max_iter, message="iteration cap reached")
    return best


def _newton_unconstrained(objective: Expr, x0: np.ndarray, tol_target: float,
                          tols: Tolerances, max_iter: int):
    x = x0.copy()
    n = len(x)
    for it in range(max_iter):
        with np.errstate(over="ignore", invalid="ignore"):
            f = objective.value(x)
            grad = objective.subgradient(x)
        if not np.isfinite(f):
            x *= 0.5
            continue
        if f < -tols.unbounded_value:
            return dict(x=x, mu=np.zeros(0), status=Status.UNBOUNDED,
                        iterations=it, message="unbounded below")
        if np.max(np.abs(grad)) <= tol_target * (1.0 + min(abs(f), 1e4)):
            return dict(x=x, mu=np.zeros(0), status=Status.OPTIMAL,
                        iterations=it, message="converged")
        H = objective.hessian(x)
        reg = 1e-10 * (1.0 + abs(np.trace(H)) / n)
        try:
            dx = np.linalg.solve(H + reg * np.eye(n), -grad)
        except np.linalg.LinAlgError:
            dx = -grad
        if grad @ dx > 0:
            dx = -grad
        alpha = 1.0
        for _ in range(60):
            with np.errstate(over="ignore", invalid="ignore"):
                ft = objective.value(x + alpha * dx)
            if np.isfinite(ft) and ft <= f + 1e-4 * alpha * (grad @ dx):
                break
            alpha *= 0.5
        x = x + alpha * dx
    return dict(x=x, mu=np.zeros(0), status=Status.NUMERICAL_FAILURE,
                iterations=max_iter, message="iteration cap reached")


# --------------------------------------------------------------------------
# Public solve with lifting, classification and KKT reporting.
# --------------------------------------------------------------------------

def _kkt_report(objective, cons, x, mu, scale_hint=1.0):
    grad = objective.subgradient(x)
    if len(cons):
        J = np.array([c.subgradient(x) for c in cons])
        g = np.array([c.value(x) for c in cons])
        r_d = grad + J.T @ mu
        comp = np.abs(mu * g)
        viol = np.maximum(g, 0.0)
        scale = 1.0 + float(np.max(np.abs(grad)))
        return float(max(np.max(np.abs(r_d)) / scale,
                         comp.max() / max(1.0, scale_hint),
                         viol.max()))
    return float(np.max(np.abs(grad)) / (1.0 + float(np.max(np.abs(grad)))))


def solve(prog: ScalarProgram, tolerances: Tolerances | None = None,
          x0=None) -> ScalarSolution:
    """Solve a convex program, returning point, value and multipliers.

    ``multipliers`` has one entry per program constraint (box bounds are
    handled internally and do not appear). Infeasibility is certified by a
    phase-one solve, unboundedness by a feasible descent ray.
    """
    tols = tolerances or DEFAULT_TOLERANCES
    m_user = len(prog.constraints)
    smooth = prog.smooth
    tol_target = tols.opt_smooth if smooth else tols.opt_nonsmooth
    # the interior-point core drives residuals well below the contract
    tol_core = min(tol_target, 1e-9)

    x_start = _start_point(prog, x0)
    if smooth:
        objective, cons = prog.objective, list(prog.constraints)
        n_tot = prog.n
        x_full = x_start
    else:
        objective, cons, extra, n_tot, aux = lift_to_smooth(
            prog.objective, list(prog.constraints), prog.n)
        cons = cons + extra
        x_full = np.zeros(n_tot)
        x_full[:prog.n] = x_start
        for idx, atom in aux:
            x_full[idx] = atom.value(x_full) + 1.0

    cons_all = cons + _box_rows(prog.lower, prog.upper)

    if not cons_all:
        raw = _newton_unconstrained(objective, x_full, tol_core, tols,
                                    tols.solver_max_iter)
    else:
        raw = _interior_point(objective, cons_all, x_full, tol_core, tols,
                              tols.solver_max_iter)

    x = raw["x"][:prog.n]
    mu_all = raw["mu"]
    mu_user = (np.maximum(mu_all[:m_user], 0.0) if len(mu_all) >= m_user
               else np.zeros(m_user))
    status = raw["status"]
    message = raw["message"]

    if status is Status.NUMERICAL_FAILURE and cons_all:
        feasible, x_feas, t_star = phase1(cons_all, n_tot, tols)
        if not feasible:
            return ScalarSolution(x=x, value=np.nan, multipliers=mu_user,
                                  status=Status.INFEASIBLE, kkt_residual=np.inf,
                                  iterations=raw["iterations"],
                                  message=f"phase-1 optimum {t_star:.3e} > 0")
        # retry once from the certified feasible point
        raw = _interior_point(objective, cons_all, x_feas, tol_core, tols,
                              2 * tols.solver_max_iter)
        x = raw["x"][:prog.n]
        mu_all = raw["mu"]
        mu_user = np.maximum(mu_all[:m_user], 0.0)
        status = raw["status"]
        message = raw["message"] + " (after phase-1 restart)"

    if status is Status.UNBOUNDED:
        certified = _certify_unbounded(objective, cons_all, raw["x"])
        if not certified:
            status = Status.NUMERICAL_FAILURE
            message = "descent ray failed certification"
        return ScalarSolution(x=x, value=-np.inf, multipliers=mu_user,
                              status=status, kkt_residual=np.inf,
                              iterations=raw["iterations"], message=message)

    value = float(prog.objective.value(raw["x"]))
    kkt = _kkt_report(objective, cons_all, raw["x"], mu_all,
                      scale_hint=1.0 + abs(value))
    return ScalarSolution(x=x, value=value, multipliers=mu_user,
                          status=status, kkt_residual=kkt,
                          iterations=raw["iterations"], message=message)


def _certify_unbounded(objective, cons, x) -> bool:
    """Check descent along the current drift direction stays feasible."""
    d = x / max(1.0, np.linalg.norm(x))
    g0 = np.array([c.value(x) for c in cons]) if cons else np.zeros(0)
    f0 = objective.value(x)
    for t in (1e2, 1e4):
        xt = x + t * d
        with np.errstate(over="ignore", invalid="ignore"):
            ft = objective.value(xt)
            gt = (np.array([c.value(xt) for c in cons]) if cons
                  else np.zeros(0))
        if not np.isfinite(ft) or ft >= f0:
            return False
        if len(gt) and np.any(gt > np.maximum(g0, 0.0) + 1e-6):
            return False
        f0 = ft
    return True


def phase1(constraints: list[Expr], n: int,
           tolerances: Tolerances | None = None, x0=None):
    """Feasibility check: minimize t subject to g_i(x) <= t, t >= -1.

    The auxiliary program is always strictly feasible, so the interior
    point core converges; feasibility of the original system is decided by
    the sign of the optimum. Returns ``(feasible, x, t_star)``.
    """
    tols = tolerances or DEFAULT_TOLERANCES
    if any(not c.is_smooth for c in constraints):
        _, constraints, extra, n, _ = lift_to_smooth(
            Affine(np.zeros(1)), list(constraints), n)
        constraints = list(constraints) + extra
    t_idx = n
    t_var = Variable(t_idx)
    rows = [Sum([c, t_var], [1.0, -1.0], _signed=True) for c in constraints]
    e = np.zeros(n + 1)
    e[t_idx] = -1.0
    rows.append(Affine(e, -1.0))  # t >= -1 keeps the program bounded
    x_start = np.zeros(n + 1)
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        x_start[: len(x0)] = x0
    g0 = max((c.value(x_start) for c in constraints), default=0.0)
    x_start[t_idx] = max(g0, -0.5) + 1.0
    obj = Affine(np.append(np.zeros(n), 1.0))
    raw = _interior_point(obj, rows, x_start, 1e-9, tols,
                          tols.solver_max_iter)
    t_star = raw["x"][t_idx]
    feasible = (raw["status"] is Status.OPTIMAL and t_star <= tols.feas)
    return feasible, raw["x"][:n], float(t_star)


# --------------------------------------------------------------------------
# Projection programs: multiplier splitting into (u, w).
# --------------------------------------------------------------------------

@dataclass
class ConeDualSolution:
    """Solution of a boundary projection program with its dual pair.

    ``gap`` is the optimal value (the distance along c from the reference
    point to the upper image), ``u`` the multipliers of the original
    constraint block and ``w`` the aggregated cone-block multipliers, which
    carry the supporting-hyperplane normal. ``w.c = 1`` holds up to the KKT
    tolerance by stationarity in the auxiliary variable.
    """

    x: np.ndarray
    z: float
    gap: float
    u: np.ndarray
    w: np.ndarray
    status: Status
    kkt_residual: float
    base: ScalarSolution


def solve_with_cone_duals(prog: ScalarProgram,
                          tolerances: Tolerances | None = None,
                          x0=None) -> ConeDualSolution:
    """Solve a projection program built by the scalarization layer.

    Requires ``prog.meta`` entries ``cone`` (the ordering cone) and
    ``split`` (index where the cone rows start). Raises
    :class:`WNormalizationError` when the recovered normal drifts too far
    from the c-normalization to be repaired.
    """
    tols = tolerances or DEFAULT_TOLERANCES
    cone = prog.meta["cone"]
    split = prog.meta["split"]
    sol = solve(prog, tolerances=tols, x0=x0)
    if not sol.optimal:
        return ConeDualSolution(x=sol.x[:-1], z=np.nan, gap=np.nan,
                                u=np.zeros(split), w=np.zeros(cone.q),
                                status=sol.status,
                                kkt_residual=sol.kkt_residual, base=sol)
    u = sol.multipliers[:split]
    mu_cone = sol.multipliers[split:]
    w = cone.Z @ mu_cone
    drift = abs(float(cone.c @ w) - 1.0)
    if drift > 10 * tols.kkt:
        raise WNormalizationError(
            f"cone-block multipliers give |w.c - 1| = {drift:.3e}")
    if drift > tols.kkt:
        w = w / float(cone.c @ w)
    z = float(sol.x[-1])
    return ConeDualSolution(x=sol.x[:-1], z=z, gap=sol.value, u=u, w=w,
                            status=sol.status, kkt_residual=sol.kkt_residual,
                            base=sol)
