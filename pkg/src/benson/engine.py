"""Primal and dual outer-approximation engines.

The primal engine maintains a shrinking outer polyhedral approximation of
the upper image. Each pass enumerates the current vertices; every vertex v
is pushed to the upper image boundary by a projection solve along c, whose
optimal value is the vertex's gap. Vertices with gap above the error level
contribute a supporting cut built from the projection multipliers. The dual
engine runs the mirrored loop on the lower image of the geometric dual,
driven by weighted-sum solves.

Both engines support the break variant (cut immediately, re-enumerate) and
the no-break variant (sweep all vertices, intersect all cuts at once), and
two recording granularities: ``fine`` records every solve into the solution
sets, ``alt`` records acceptances on one side and cuts on the other, giving
coarser approximations with fewer generators. Solved vertices are cached by
coordinates so a vertex surviving several passes costs one scalar solve.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .cones import OrderingCone
from .duality import DualFrame, dual_outer_from_primal, primal_outer_from_dual
from .errors import (
    CutValidationError,
    DualUnboundedError,
    EngineError,
    InfeasibleProblemError,
    InitUnboundedError,
    MaxIterationsError,
    VerticalCutError,
    VerticalInitError,
)
from .polyhedra import HalfSpace, HRep, Polyhedron, lex_order
from .problem import CvopProblem
from .scalar_solver import Status, solve, solve_with_cone_duals
from .scalarize import projection_program, weighted_sum_program

log = logging.getLogger("benson.engine")

__all__ = [
    "RunConfig", "PrimalRecord", "DualRecord", "RunStats", "EpsilonSolution",
    "initialize_primal", "run_primal", "initialize_dual", "run_dual", "run",
]


@dataclass
class RunConfig:
    epsilon: float
    algorithm: str = "primal"      # "primal" | "dual"
    use_break: bool = True
    granularity: str = "fine"      # "fine" | "alt"
    max_iterations: int = 500
    tolerances: Tolerances = field(default_factory=lambda: DEFAULT_TOLERANCES)
    cache_solutions: bool = True
    validate_cuts: bool = True

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.algorithm not in ("primal", "dual"):
            raise ValueError("algorithm must be 'primal' or 'dual'")
        if self.granularity not in ("fine", "alt"):
            raise ValueError("granularity must be 'fine' or 'alt'")


@dataclass
class PrimalRecord:
    """A weak minimizer candidate with its objective image."""

    x: np.ndarray
    image: np.ndarray
    source: str  # "init" | "cut" | "accept"


@dataclass
class DualRecord:
    """A dual maximizer: feasible dual point and its dual map value."""

    t: np.ndarray
    value: np.ndarray


@dataclass
class RunStats:
    num_scalar_solves: int = 0
    num_cached_hits: int = 0
    num_vertex_enumerations: int = 0
    num_aux_vertex_enumerations: int = 0
    iterations: int = 0            # passes that produced at least one cut
    passes: int = 0
    duplicates_merged: int = 0
    degenerate_merges: int = 0
    wall_time: float = 0.0
    pass_gaps: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "num_opt": self.num_scalar_solves,
            "num_cached": self.num_cached_hits,
            "num_vert_enum": self.num_vertex_enumerations,
            "num_aux_vert_enum": self.num_aux_vertex_enumerations,
            "iterations": self.iterations,
            "passes": self.passes,
            "duplicates_merged": self.duplicates_merged,
            "time_s": self.wall_time,
            "pass_gaps": list(self.pass_gaps),
        }


@dataclass
class EpsilonSolution:
    """Finite solution sets plus the four induced approximation polyhedra."""

    epsilon: float
    achieved_epsilon: float
    algorithm: str
    granularity: str
    primal_points: list[PrimalRecord]
    dual_points: list[DualRecord]
    inner_primal: Polyhedron
    outer_primal: Polyhedron
    inner_dual: Polyhedron
    outer_dual: Polyhedron
    stats: RunStats
    complete: bool = True

    @property
    def images(self) -> np.ndarray:
        return np.array([r.image for r in self.primal_points])

    @property
    def dual_values(self) -> np.ndarray:
        return np.array([r.value for r in self.dual_points])


# --------------------------------------------------------------------------
# Shared bookkeeping.
# --------------------------------------------------------------------------

def _key(v: np.ndarray) -> tuple:
    return tuple(np.round(np.asarray(v, dtype=float), 9))


def _add_primal(records: list[PrimalRecord], stats: RunStats,
                x, image, source, tol: float) -> None:
    x = np.asarray(x, dtype=float)
    for r in records:
        scale = max(1.0, float(np.max(np.abs(r.x))))
        if np.max(np.abs(r.x - x)) <= tol * scale:
            stats.duplicates_merged += 1
            return
    records.append(PrimalRecord(x=x, image=np.asarray(image, dtype=float),
                                source=source))


def _add_dual(records: list[DualRecord], stats: RunStats,
              t, value, tol: float) -> None:
    value = np.asarray(value, dtype=float)
    for r in records:
        scale = max(1.0, float(np.max(np.abs(r.value))))
        if np.max(np.abs(r.value - value)) <= tol * scale:
            stats.duplicates_merged += 1
            return
    records.append(DualRecord(t=np.asarray(t, dtype=float), value=value))


def _check_cut_against_points(h: HalfSpace, points, tol: float,
                              context: str) -> None:
    """A supporting cut must contain every certified point of its image."""
    for p in points:
        viol = h.violation(np.asarray(p))
        scale = max(1.0, abs(h.offset))
        if viol > tol * scale:
            raise CutValidationError(
                f"{context}: cut excludes a certified point by {viol:.3e}")


def _surface_solve_failure(sol, what: str):
    if sol.status is Status.UNBOUNDED:
        raise InitUnboundedError(
            f"{what} is unbounded: the problem is not bounded")
    if sol.status is Status.INFEASIBLE:
        raise InfeasibleProblemError(f"{what} is infeasible")
    raise EngineError(f"{what} failed: {sol.status.value} ({sol.message})")


# --------------------------------------------------------------------------
# Primal algorithm.
# --------------------------------------------------------------------------

def initialize_primal(prob: CvopProblem, frame: DualFrame,
                      cfg: RunConfig, stats: RunStats):
    """Weighted-sum solves along the dual cone generators.

    Produces the initial outer approximation (one halfspace per dual
    generator), the seed solution sets and the list of certified images.
    """
    cone = prob.cone
    tols = cfg.tolerances
    halfspaces = []
    primal: list[PrimalRecord] = []
    dual: list[DualRecord] = []
    images = []
    for j in range(cone.num_dual_generators):
        zj = cone.Z[:, j]
        sol = solve(weighted_sum_program(prob, zj), tolerances=tols)
        stats.num_scalar_solves += 1
        if not sol.optimal:
            _surface_solve_failure(sol, f"initial weighted-sum solve {j}")
        image = prob.objective_values(sol.x)
        halfspaces.append(HalfSpace(normal=zj.copy(), offset=sol.value))
        _add_primal(primal, stats, sol.x, image, "init", tols.dup)
        t = frame.dual_point(zj)
        value = np.append(t[: cone.q - 1], sol.value)
        _add_dual(dual, stats, t, value, tols.dup)
        images.append(image)
    poly = Polyhedron.from_halfspaces(halfspaces, tols)
    if cfg.granularity == "alt":
        primal = []
    return poly, primal, dual, images


def run_primal(prob: CvopProblem, frame: DualFrame,
               cfg: RunConfig) -> EpsilonSolution:
    """Outer approximation of the upper image, driven by projection solves."""
    t0 = time.perf_counter()
    stats = RunStats()
    tols = cfg.tolerances
    eps = cfg.epsilon
    poly, primal, dual, images = initialize_primal(prob, frame, cfg, stats)
    dual_values_seen = [r.value for r in dual]
    cache: dict[tuple, float] = {}
    warm = None
    terminated = False
    last_gap = np.inf

    for _ in range(cfg.max_iterations):
        vrep = poly.vertex_rep()
        stats.num_vertex_enumerations += 1
        stats.passes += 1
        order = lex_order(vrep.vertices)
        cuts: list[HalfSpace] = []
        pass_gap = 0.0
        for vi in order:
            v = vrep.vertices[vi]
            key = _key(v)
            if cfg.cache_solutions and key in cache:
                stats.num_cached_hits += 1
                pass_gap = max(pass_gap, cache[key])
                continue
            sol = solve_with_cone_duals(projection_program(prob, v),
                                        tolerances=tols, x0=warm)
            stats.num_scalar_solves += 1
            if not sol.base.optimal:
                _surface_solve_failure(sol.base,
                                       f"projection solve at vertex {v}")
            warm = np.append(sol.x, sol.z)
            gap = sol.gap
            cache[key] = gap
            pass_gap = max(pass_gap, gap)
            image = prob.objective_values(sol.x)
            t = frame.dual_point(sol.w)
            value = np.append(t[: prob.q - 1], float(sol.w @ v) + gap)
            accepted = gap <= eps
            if cfg.granularity == "fine":
                _add_primal(primal, stats, sol.x, image,
                            "accept" if accepted else "cut", tols.dup)
                _add_dual(dual, stats, t, value, tols.dup)
            else:
                if accepted:
                    _add_primal(primal, stats, sol.x, image, "accept",
                                tols.dup)
                else:
                    _add_dual(dual, stats, t, value, tols.dup)
            images.append(image)
            dual_values_seen.append(value)
            if not accepted:
                cut = frame.halfspace_in_objective_space(value)
                if cfg.validate_cuts:
                    _check_cut_against_points(cut, images, 10 * tols.feas,
                                              "primal cut")
                cuts.append(cut)
                if cfg.use_break:
                    break
        stats.pass_gaps.append(pass_gap)
        last_gap = pass_gap
        if not cuts:
            terminated = True
            break
        for h in cuts:
            poly = _add_cut(poly, h)
        stats.iterations += 1

    achieved = last_gap
    solution = _finalize(prob, frame, cfg, stats, primal, dual,
                         images, dual_values_seen, achieved,
                         complete=terminated)
    stats.wall_time = time.perf_counter() - t0
    if not terminated:
        raise MaxIterationsError(
            f"no convergence within {cfg.max_iterations} passes "
            f"(achieved error level {achieved:.4g})",
            partial=solution, achieved_epsilon=achieved)
    return solution


def _add_cut(poly: Polyhedron, h: HalfSpace) -> Polyhedron:
    from .polyhedra import add_halfspace
    return add_halfspace(poly, h)


# --------------------------------------------------------------------------
# Dual algorithm.
# --------------------------------------------------------------------------

def _checked_weighted_solve(prob, frame, w, tols, what):
    sol = solve(weighted_sum_program(prob, w, tol=1e-6), tolerances=tols)
    if sol.status is Status.UNBOUNDED:
        raise DualUnboundedError(f"{what}: weighted-sum program unbounded")
    if not sol.optimal:
        _surface_solve_failure(sol, what)
    image = prob.objective_values(sol.x)
    drifted = (float(np.max(np.abs(image))) >= tols.drift
               or "stalled" in sol.message)
    return sol, image, drifted


def initialize_dual(prob: CvopProblem, frame: DualFrame,
                    cfg: RunConfig, stats: RunStats):
    """Solve the mean-weight scalarization and clip the dual strip with the
    resulting non-vertical supporting halfspace."""
    cone = prob.cone
    tols = cfg.tolerances
    eta = cone.Z.mean(axis=1)
    sol, image, drifted = _checked_weighted_solve(
        prob, frame, eta, tols, "initial mean-weight solve")
    stats.num_scalar_solves += 1
    h0 = frame.halfspace_in_dual_space(image)
    if drifted or frame.is_vertical(h0, tols.vertical):
        raise VerticalInitError(
            "initial supporting hyperplane of the lower image is "
            "numerically vertical; the scalarization optimum is likely "
            "not attained (image magnitude %.3e)" % float(np.max(np.abs(image))))
    rows = frame.vertical_halfspaces(cone) + [h0]
    poly = Polyhedron.from_halfspaces(rows, tols)
    t = frame.dual_point(eta)
    value = np.append(t[: cone.q - 1], sol.value)
    primal: list[PrimalRecord] = []
    dual: list[DualRecord] = []
    _add_primal(primal, stats, sol.x, image, "init", tols.dup)
    if cfg.granularity == "fine":
        _add_dual(dual, stats, t, value, tols.dup)
    return poly, primal, dual, [image], [value]


def run_dual(prob: CvopProblem, frame: DualFrame,
             cfg: RunConfig) -> EpsilonSolution:
    """Outer approximation of the lower image via weighted-sum solves."""
    t0 = time.perf_counter()
    stats = RunStats()
    tols = cfg.tolerances
    eps = cfg.epsilon
    q = prob.q
    poly, primal, dual, images, dual_values_seen = initialize_dual(
        prob, frame, cfg, stats)
    cache: dict[tuple, float] = {}
    terminated = False
    last_gap = np.inf

    for _ in range(cfg.max_iterations):
        vrep = poly.vertex_rep()
        stats.num_vertex_enumerations += 1
        stats.passes += 1
        order = lex_order(vrep.vertices)
        cuts: list[HalfSpace] = []
        pass_gap = 0.0
        for vi in order:
            t = vrep.vertices[vi]
            key = _key(t)
            if cfg.cache_solutions and key in cache:
                stats.num_cached_hits += 1
                pass_gap = max(pass_gap, cache[key])
                continue
            w = frame.weight(t)
            sol, image, drifted = _checked_weighted_solve(
                prob, frame, w, tols, f"weighted-sum solve at vertex {t}")
            stats.num_scalar_solves += 1
            y_w = sol.value
            gap = float(t[q - 1] - y_w)
            cache[key] = gap
            pass_gap = max(pass_gap, gap)
            value = np.append(t[: q - 1], y_w)
            accepted = gap <= eps
            boundary = prob.cone.dual_on_boundary(w, 1e-7)
            if cfg.granularity == "fine":
                _add_primal(primal, stats, sol.x, image,
                            "accept" if accepted else "cut", tols.dup)
                if (not boundary) or accepted:
                    _add_dual(dual, stats, t, value, tols.dup)
            else:
                if accepted:
                    _add_dual(dual, stats, t, value, tols.dup)
                else:
                    _add_primal(primal, stats, sol.x, image, "cut", tols.dup)
            images.append(image)
            dual_values_seen.append(value)
            if not accepted:
                cut = frame.halfspace_in_dual_space(image)
                if drifted or frame.is_vertical(cut, tols.vertical):
                    raise VerticalCutError(
                        "dual cut is numerically vertical; weighted-sum "
                        "optimum likely not attained (image magnitude "
                        "%.3e)" % float(np.max(np.abs(image))))
                if cfg.validate_cuts:
                    _check_cut_against_points(cut, dual_values_seen,
                                              10 * tols.feas, "dual cut")
                cuts.append(cut)
                if cfg.use_break:
                    break
        stats.pass_gaps.append(pass_gap)
        last_gap = pass_gap
        if not cuts:
            terminated = True
            break
        for h in cuts:
            poly = _add_cut(poly, h)
        stats.iterations += 1

    achieved = last_gap
    solution = _finalize(prob, frame, cfg, stats, primal, dual,
                         images, dual_values_seen, achieved,
                         complete=terminated)
    stats.wall_time = time.perf_counter() - t0
    if not terminated:
        raise MaxIterationsError(
            f"no convergence within {cfg.max_iterations} passes "
            f"(achieved error level {achieved:.4g})",
            partial=solution, achieved_epsilon=achieved)
    return solution


def run(prob: CvopProblem, frame: DualFrame | None,
        cfg: RunConfig) -> EpsilonSolution:
    """Dispatch on the configured algorithm."""
    if frame is None:
        frame = DualFrame.for_cone(prob.cone, prob.frame_columns)
    if cfg.algorithm == "primal":
        return run_primal(prob, frame, cfg)
    return run_dual(prob, frame, cfg)


# --------------------------------------------------------------------------
# Final polyhedra.
#
# All four approximations derive from the two finite solution sets through
# the coupling: dual map values give an outer approximation of the upper
# image (and, enumerated, the inner approximation of the lower image from
# its vertices and rays); image points give an outer approximation of the
# lower image (and from there the inner approximation of the upper image).
# --------------------------------------------------------------------------

def _finalize(prob, frame, cfg, stats, primal, dual, images,
              dual_values_seen, achieved, complete) -> EpsilonSolution:
    tols = cfg.tolerances
    vals = [r.value for r in dual] or list(dual_values_seen)
    imgs = [r.image for r in primal] or list(images)

    outer_primal = Polyhedron.from_halfspaces(
        primal_outer_from_dual(frame, vals).halfspaces, tols)
    outer_primal.vertex_rep()
    stats.num_vertex_enumerations += 1

    outer_dual = Polyhedron.from_halfspaces(
        dual_outer_from_primal(frame, prob.cone, imgs).halfspaces, tols)
    od = outer_dual.vertex_rep()
    stats.num_aux_vertex_enumerations += 1

    rows = [frame.halfspace_in_objective_space(v) for v in od.vertices]
    for r in od.rays:
        h = frame.halfspace_from_dual_ray(r)
        if h is not None:
            rows.append(h)
    inner_primal = Polyhedron.from_halfspaces(rows, tols)
    inner_primal.vertex_rep()
    stats.num_aux_vertex_enumerations += 1

    op = outer_primal.vertex_rep()
    rows = [frame.halfspace_in_dual_space(y) for y in op.vertices]
    for d in op.rays:
        h = frame.recession_halfspace_in_dual_space(d)
        if h is not None:
            rows.append(h)
    inner_dual = Polyhedron.from_halfspaces(rows, tols)
    inner_dual.vertex_rep()
    stats.num_aux_vertex_enumerations += 1

    return EpsilonSolution(
        epsilon=cfg.epsilon,
        achieved_epsilon=float(achieved),
        algorithm=cfg.algorithm,
        granularity=cfg.granularity,
        primal_points=list(primal),
        dual_points=list(dual),
        inner_primal=inner_primal,
        outer_primal=outer_primal,
        inner_dual=inner_dual,
        outer_dual=outer_dual,
        stats=stats,
        complete=complete,
    )
