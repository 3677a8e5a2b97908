"""Problem files and result bundles.

Problems are declarative JSON documents: a variable block, objective and
constraint expression trees in the prefix schema of
:mod:`benson.expressions`, the ordering cone and an optional constraint
cone. Results serialize to a directory: ``solution.json`` holds the
solution sets, statistics and certification verdicts; polyhedra go to CSV
(one file per representation) so plotting tools can consume them directly.
A bundle is re-loadable and re-certifiable without re-running the engine.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .certification import CertificationReport
from .cones import OrderingCone, reduce_constraint_cone
from .config import DEFAULT_TOLERANCES
from .engine import DualRecord, EpsilonSolution, PrimalRecord, RunConfig, RunStats
from .errors import InfeasibleProblemError, ParseError
from .expressions import parse_expr
from .polyhedra import HalfSpace, HRep, Polyhedron, VRep
from .problem import CvopProblem
from .scalar_solver import phase1

__all__ = ["load_problem", "save_bundle", "load_bundle", "packaged_problem"]


def packaged_problem(name: str) -> Path:
    """Path of a problem file shipped with the package."""
    from importlib.resources import files

    return Path(str(files("benson").joinpath("problems", name)))


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ParseError(f"missing field '{key}'", where)
    return doc[key]


def _bounds(block, n: int, key: str):
    raw = block.get(key)
    fill = -np.inf if key == "lower" else np.inf
    if raw is None:
        return np.full(n, fill)
    if len(raw) != n:
        raise ParseError(f"'{key}' must list one bound per variable",
                         f"variables.{key}")
    return np.array([fill if v is None else float(v) for v in raw])


def load_problem(path, check_feasibility: bool = True) -> CvopProblem:
    """Load and validate a problem file.

    Applies the constraint-cone reduction so the returned problem has
    componentwise constraints, and certifies feasibility with a phase-one
    solve unless disabled.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e}", str(path)) from None

    var_block = _require(doc, "variables", "variables")
    n = int(_require(var_block, "count", "variables.count"))
    if n <= 0:
        raise ParseError("variable count must be positive", "variables.count")
    lower = _bounds(var_block, n, "lower")
    upper = _bounds(var_block, n, "upper")

    obj_docs = _require(doc, "objectives", "objectives")
    if not isinstance(obj_docs, list) or len(obj_docs) < 2:
        raise ParseError("need at least two objectives", "objectives")
    objectives = [parse_expr(o, n, f"objectives[{i}]")
                  for i, o in enumerate(obj_docs)]

    con_docs = doc.get("constraints", [])
    constraints = [parse_expr(cdoc, n, f"constraints[{i}]")
                   for i, cdoc in enumerate(con_docs)]

    cone_doc = _require(doc, "cone_C", "cone_C")
    gens = np.array(_require(cone_doc, "generators", "cone_C.generators"),
                    dtype=float).T
    duals = np.array(
        _require(cone_doc, "dual_generators", "cone_C.dual_generators"),
        dtype=float).T
    c = np.array(_require(cone_doc, "c", "cone_C.c"), dtype=float)
    cone = OrderingCone(gens, duals, c)
    frame_cols = None
    if cone_doc.get("c_frame") is not None:
        frame_cols = np.array(cone_doc["c_frame"], dtype=float).T

    cone_d = doc.get("cone_D", "orthant")
    if cone_d != "orthant":
        if not isinstance(cone_d, dict) or "dual_generators" not in cone_d:
            raise ParseError(
                "cone_D must be 'orthant' or carry dual_generators", "cone_D")
        D = np.array(cone_d["dual_generators"], dtype=float).T
        constraints = reduce_constraint_cone(constraints, D)

    prob = CvopProblem(n=n, objectives=objectives, constraints=constraints,
                       cone=cone, lower=lower, upper=upper,
                       frame_columns=frame_cols, name=doc.get("name", path.stem))

    if check_feasibility and prob.m:
        from .scalar_solver import _box_rows

        rows = list(prob.constraints) + _box_rows(prob.lower, prob.upper)
        feasible, _, t_star = phase1(rows, prob.n, DEFAULT_TOLERANCES,
                                     x0=prob.box_center())
        if not feasible:
            raise InfeasibleProblemError(
                f"problem '{prob.name}' has empty feasible set "
                f"(phase-1 optimum {t_star:.3e})")
    return prob


# --------------------------------------------------------------------------
# Result bundles.
# --------------------------------------------------------------------------

def _write_hrep(path: Path, poly: Polyhedron) -> None:
    q = poly.dim
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"a{i + 1}" for i in range(q)] + ["offset"])
        for h in poly.hrep.halfspaces:
            w.writerow([repr(float(v)) for v in h.normal]
                       + [repr(float(h.offset))])


def _write_vrep(path: Path, poly: Polyhedron) -> None:
    q = poly.dim
    vrep = poly.vertex_rep()
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind"] + [f"y{i + 1}" for i in range(q)])
        for v in vrep.vertices:
            w.writerow(["vertex"] + [repr(float(x)) for x in v])
        for r in vrep.rays:
            w.writerow(["ray"] + [repr(float(x)) for x in r])


def _read_hrep(path: Path) -> HRep:
    rows = list(csv.reader(path.open()))
    hs = []
    for row in rows[1:]:
        vals = [float(v) for v in row]
        hs.append(HalfSpace(normal=np.array(vals[:-1]), offset=vals[-1]))
    return HRep(tuple(hs))


def _read_vrep(path: Path) -> VRep:
    rows = list(csv.reader(path.open()))
    verts, rays = [], []
    for row in rows[1:]:
        (verts if row[0] == "vertex" else rays).append(
            [float(v) for v in row[1:]])
    q = len(rows[0]) - 1
    return VRep(vertices=np.array(verts).reshape(-1, q),
                rays=np.array(rays).reshape(-1, q))


def _plot_order(vertices: np.ndarray) -> np.ndarray:
    """Chain order for plotting: by first coordinate, 2D boundary style."""
    if len(vertices) == 0:
        return vertices
    idx = np.lexsort((vertices[:, -1], vertices[:, 0]))
    return vertices[idx]


_POLY_NAMES = ("outer_primal", "inner_primal", "outer_dual", "inner_dual")


def save_bundle(outdir, sol: EpsilonSolution, cfg: RunConfig,
                report: CertificationReport | None,
                problem_path=None) -> Path:
    """Write a result bundle. Returns the output directory path."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    doc = {
        "epsilon": sol.epsilon,
        "achieved_epsilon": sol.achieved_epsilon,
        "algorithm": sol.algorithm,
        "granularity": sol.granularity,
        "break": cfg.use_break,
        "complete": sol.complete,
        "problem": str(problem_path) if problem_path else None,
        "primal_points": [
            {"x": list(map(float, r.x)), "image": list(map(float, r.image)),
             "source": r.source}
            for r in sol.primal_points
        ],
        "dual_points": [
            {"t": list(map(float, r.t)), "value": list(map(float, r.value))}
            for r in sol.dual_points
        ],
        "stats": sol.stats.as_dict(),
        "certification": report.as_dict() if report else None,
    }
    (outdir / "solution.json").write_text(json.dumps(doc, indent=2))

    for name in _POLY_NAMES:
        poly = getattr(sol, name)
        _write_hrep(outdir / f"{name}.hrep.csv", poly)
        _write_vrep(outdir / f"{name}.vrep.csv", poly)

    with (outdir / "stats.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epsilon", "alg/variant", "num_opt", "num_vert_enum",
                    "card_X", "card_T", "time_s"])
        variant = (f"{sol.algorithm}/"
                   f"{'break' if cfg.use_break else 'no break'}/"
                   f"{sol.granularity}")
        w.writerow([sol.epsilon, variant, sol.stats.num_scalar_solves,
                    sol.stats.num_vertex_enumerations,
                    len(sol.primal_points), len(sol.dual_points),
                    f"{sol.stats.wall_time:.3f}"])

    for which, poly in (("primal", sol.outer_primal),
                        ("dual", sol.outer_dual)):
        verts = _plot_order(poly.vertices())
        inner = getattr(sol, f"inner_{which}")
        inner_verts = _plot_order(inner.vertices())
        with (outdir / f"plot_{which}.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            q = poly.dim
            w.writerow(["set", "index"] + [f"y{i + 1}" for i in range(q)])
            for i, v in enumerate(verts):
                w.writerow(["outer", i] + [repr(float(x)) for x in v])
            for i, v in enumerate(inner_verts):
                w.writerow(["inner", i] + [repr(float(x)) for x in v])
    return outdir


def load_bundle(outdir) -> tuple[EpsilonSolution, dict]:
    """Reconstruct an :class:`EpsilonSolution` from a bundle directory."""
    outdir = Path(outdir)
    doc = json.loads((outdir / "solution.json").read_text())
    polys = {}
    for name in _POLY_NAMES:
        hrep = _read_hrep(outdir / f"{name}.hrep.csv")
        vrep = _read_vrep(outdir / f"{name}.vrep.csv")
        polys[name] = Polyhedron(hrep=hrep, vrep=vrep, dirty=False,
                                 tolerances=DEFAULT_TOLERANCES)
    stats_doc = doc["stats"]
    stats = RunStats(
        num_scalar_solves=stats_doc["num_opt"],
        num_cached_hits=stats_doc["num_cached"],
        num_vertex_enumerations=stats_doc["num_vert_enum"],
        num_aux_vertex_enumerations=stats_doc["num_aux_vert_enum"],
        iterations=stats_doc["iterations"],
        passes=stats_doc["passes"],
        duplicates_merged=stats_doc["duplicates_merged"],
        wall_time=stats_doc["time_s"],
        pass_gaps=list(stats_doc["pass_gaps"]),
    )
    sol = EpsilonSolution(
        epsilon=doc["epsilon"],
        achieved_epsilon=doc["achieved_epsilon"],
        algorithm=doc["algorithm"],
        granularity=doc["granularity"],
        primal_points=[
            PrimalRecord(x=np.array(r["x"]), image=np.array(r["image"]),
                         source=r["source"])
            for r in doc["primal_points"]
        ],
        dual_points=[
            DualRecord(t=np.array(r["t"]), value=np.array(r["value"]))
            for r in doc["dual_points"]
        ],
        inner_primal=polys["inner_primal"],
        outer_primal=polys["outer_primal"],
        inner_dual=polys["inner_dual"],
        outer_dual=polys["outer_dual"],
        stats=stats,
        complete=doc["complete"],
    )
    return sol, doc
