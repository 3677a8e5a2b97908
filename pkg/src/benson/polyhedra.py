"""Floating-point polyhedral calculus.

A polyhedron is held primarily by its H-representation (an ordered list of
halfspaces ``{y : a.y >= b}``). The V-representation (vertices plus extreme
rays) is produced by the double description method on the homogenization
``{(y, l) : a.y - b*l >= 0, l >= 0}``: generators with ``l > 0`` are
vertices, generators with ``l = 0`` are recession directions. Insertion is
incremental, so adding one halfspace to an already enumerated polyhedron
performs a single double-description step instead of a full recomputation.

Only pointed polyhedra are supported; a system whose homogenization has a
nontrivial lineality space raises :class:`LineError`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import EmptyError, LineError, ZeroNormalError

__all__ = [
    "HalfSpace",
    "HRep",
    "VRep",
    "Polyhedron",
    "enumerate_vertices",
    "add_halfspace",
    "remove_redundant",
    "lex_order",
]


def lex_order(points: np.ndarray, decimals: int = 9) -> np.ndarray:
    """Indices sorting rows lexicographically by coordinates (ascending).

    Coordinates are rounded first so that float noise below ``10**-decimals``
    cannot flip the order of geometrically identical points.
    """
    if len(points) == 0:
        return np.arange(0)
    rounded = np.round(np.asarray(points, dtype=float), decimals)
    keys = tuple(rounded[:, j] for j in range(rounded.shape[1] - 1, -1, -1))
    return np.lexsort(keys)


@dataclass(frozen=True)
class HalfSpace:
    """The closed halfspace ``{y : normal . y >= offset}``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        normal = np.atleast_1d(np.asarray(self.normal, dtype=float))
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", float(self.offset))
        if np.linalg.norm(normal) <= DEFAULT_TOLERANCES.zero:
            raise ZeroNormalError("halfspace normal is numerically zero")

    @property
    def dim(self) -> int:
        return self.normal.shape[0]

    def violation(self, y: np.ndarray) -> float:
        """Positive when ``y`` is outside the halfspace."""
        return self.offset - float(self.normal @ y)

    def scaled_unit(self) -> tuple[np.ndarray, float]:
        s = np.linalg.norm(self.normal)
        return self.normal / s, self.offset / s


@dataclass(frozen=True)
class HRep:
    """Ordered intersection of halfspaces."""

    halfspaces: tuple[HalfSpace, ...]

    def __post_init__(self):
        hs = tuple(self.halfspaces)
        if not hs:
            raise ValueError("HRep requires at least one halfspace")
        dims = {h.dim for h in hs}
        if len(dims) != 1:
            raise ValueError("mixed halfspace dimensions")
        object.__setattr__(self, "halfspaces", hs)

    @property
    def dim(self) -> int:
        return self.halfspaces[0].dim

    def __len__(self) -> int:
        return len(self.halfspaces)

    def as_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (A, b) with the polyhedron equal to ``{y : A y >= b}``."""
        A = np.array([h.normal for h in self.halfspaces], dtype=float)
        b = np.array([h.offset for h in self.halfspaces], dtype=float)
        return A, b

    def contains(self, y: np.ndarray, tol: float | None = None) -> bool:
        tol = DEFAULT_TOLERANCES.feas if tol is None else tol
        A, b = self.as_matrix()
        scale = np.maximum(1.0, np.abs(b))
        return bool(np.all(A @ y - b >= -tol * scale))


@dataclass(frozen=True)
class VRep:
    """Generator representation conv(vertices) + cone(rays)."""

    vertices: np.ndarray  # (s, q)
    rays: np.ndarray      # (t, q), unit Euclidean length

    @property
    def dim(self) -> int:
        if self.vertices.size:
            return self.vertices.shape[1]
        return self.rays.shape[1]

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_rays(self) -> int:
        return self.rays.shape[0]


# --------------------------------------------------------------------------
# Double description state for the homogenized cone.
# --------------------------------------------------------------------------

class _DDState:
    """Minimal generator set of ``{x : rows @ x >= 0}`` in R^(q+1).

    ``rows`` are unit-normalized; ``rays`` are unit generators; ``active``
    is the boolean incidence matrix (ray i tight on row j).
    """

    __slots__ = ("rows", "rays", "active", "tol")

    def __init__(self, rows, rays, active, tol):
        self.rows = rows
        self.rays = rays
        self.active = active
        self.tol = tol

    def copy(self) -> "_DDState":
        return _DDState(self.rows.copy(), self.rays.copy(),
                        self.active.copy(), self.tol)


def _homogenize(hrep: HRep) -> np.ndarray:
    """Rows [a, -b]/|[a, -b]| of the homogenized system, l>=0 row first."""
    A, b = hrep.as_matrix()
    q = hrep.dim
    rows = np.empty((len(hrep) + 1, q + 1))
    rows[0, :q] = 0.0
    rows[0, q] = 1.0
    rows[1:, :q] = A
    rows[1:, q] = -b
    norms = np.linalg.norm(rows, axis=1)
    if np.any(norms <= DEFAULT_TOLERANCES.zero):
        raise ZeroNormalError("degenerate homogenized halfspace")
    return rows / norms[:, None]


def _independent_rows(rows: np.ndarray, tol: float) -> list[int]:
    """Greedy (order-respecting) selection of a maximal independent subset."""
    d = rows.shape[1]
    chosen: list[int] = []
    basis = np.zeros((0, d))
    for i in range(rows.shape[0]):
        r = rows[i]
        if basis.shape[0]:
            # residual after projecting onto the span collected so far
            coef, *_ = np.linalg.lstsq(basis.T, r, rcond=None)
            resid = r - basis.T @ coef
        else:
            resid = r
        if np.linalg.norm(resid) > tol:
            chosen.append(i)
            basis = np.vstack([basis, r])
            if len(chosen) == d:
                break
    return chosen


def _dedup_unit_rows(rays: np.ndarray, tol: float) -> np.ndarray:
    if rays.shape[0] <= 1:
        return rays
    order = lex_order(rays)
    rays = rays[order]
    keep = [0]
    for i in range(1, rays.shape[0]):
        if np.max(np.abs(rays[i] - rays[keep[-1]])) > tol:
            keep.append(i)
        else:
            continue
    # lex-adjacent filtering can miss non-adjacent dups only if three rays
    # are pairwise within tol, which the same radius then merges anyway
    return rays[keep]


def _dd_init(rows: np.ndarray, tol: float) -> _DDState:
    d = rows.shape[1]
    idx = _independent_rows(rows, max(tol, 1e-10))
    if len(idx) < d:
        raise LineError(
            "halfspace normals span only %d of %d dimensions: the "
            "polyhedron contains a line" % (len(idx), d - 1)
        )
    B = rows[idx]
    # Extreme rays of the simplicial cone {x : B x >= 0} are the columns of
    # B^-1 (column j is tight on every basis row except j).
    R = np.linalg.inv(B).T
    R /= np.linalg.norm(R, axis=1)[:, None]
    state = _DDState(rows[idx], R, None, tol)
    state.active = np.abs(state.rays @ state.rows.T) <= tol
    remaining = [i for i in range(rows.shape[0]) if i not in idx]
    for i in remaining:
        _dd_insert(state, rows[i])
    return state


def _adjacent(active: np.ndarray, i: int, j: int, min_common: int) -> bool:
    common = active[i] & active[j]
    if int(common.sum()) < min_common:
        return False
    # combinatorial test: no third generator may be tight on every row that
    # both i and j are tight on
    covered = np.all(active[:, common], axis=1)
    covered[i] = covered[j] = False
    return not bool(covered.any())


def _dd_insert(state: _DDState, row: np.ndarray) -> None:
    """One double description step: intersect with ``{x : row.x >= 0}``."""
    tol = state.tol
    d = row.shape[0]
    vals = state.rays @ row
    pos = np.where(vals > tol)[0]
    neg = np.where(vals < -tol)[0]
    zero = np.where(np.abs(vals) <= tol)[0]

    state.rows = np.vstack([state.rows, row])
    if neg.size == 0:
        state.active = np.hstack(
            [state.active, (np.abs(vals) <= tol)[:, None]])
        return

    min_common = d - 2
    new_rays = []
    for p in pos:
        for n in neg:
            if not _adjacent(state.active, p, n, min_common):
                continue
            r = vals[p] * state.rays[n] - vals[n] * state.rays[p]
            nrm = np.linalg.norm(r)
            if nrm <= tol:
                continue
            new_rays.append(r / nrm)

    kept = np.concatenate([pos, zero])
    rays = state.rays[kept]
    if new_rays:
        rays = np.vstack([rays, np.array(new_rays)])
    rays = _dedup_unit_rows(rays, 10 * tol)
    if rays.shape[0] == 0:
        raise EmptyError("halfspace system is infeasible")
    state.rays = rays
    state.active = np.abs(rays @ state.rows.T) <= tol


def _dd_finalize(state: _DDState, q: int, tol: Tolerances) -> VRep:
    lam = state.rays[:, q]
    is_vertex = lam > tol.zero
    verts = state.rays[is_vertex, :q] / lam[is_vertex, None]
    raydirs = state.rays[~is_vertex, :q]
    if raydirs.size:
        norms = np.linalg.norm(raydirs, axis=1)
        ok = norms > tol.zero
        raydirs = raydirs[ok] / norms[ok, None]
    if verts.shape[0] == 0:
        raise EmptyError("halfspace system is infeasible (no finite point)")
    verts = _merge_close(verts, tol.dup)
    verts = verts[lex_order(verts)]
    if raydirs.size:
        raydirs = _merge_close(raydirs, tol.dup)
        raydirs = raydirs[lex_order(raydirs)]
    else:
        raydirs = np.zeros((0, q))
    return VRep(vertices=verts, rays=raydirs)


def _merge_close(points: np.ndarray, radius: float) -> np.ndarray:
    """Merge points closer than ``radius`` (scaled), keeping one per cluster.

    Degenerate vertices split by float noise would otherwise inflate vertex
    counts and trigger duplicate scalar solves.
    """
    if points.shape[0] <= 1:
        return points
    kept: list[np.ndarray] = []
    for p in points:
        scale = max(1.0, float(np.max(np.abs(p))))
        if any(np.max(np.abs(p - k)) <= radius * scale for k in kept):
            continue
        kept.append(p)
    return np.array(kept)


# --------------------------------------------------------------------------
# Public polyhedron type and operations.
# --------------------------------------------------------------------------

@dataclass
class Polyhedron:
    """H-representation with a lazily maintained V-representation.

    ``dirty`` is True while halfspaces added after the last enumeration are
    still pending. Enumeration inserts the pending rows into the stored
    double-description state instead of starting over.
    """

    hrep: HRep
    tolerances: Tolerances = field(default_factory=lambda: DEFAULT_TOLERANCES)
    vrep: VRep | None = None
    dirty: bool = True
    _dd: _DDState | None = field(default=None, repr=False)
    _n_enumerated: int = 0

    @classmethod
    def from_halfspaces(cls, halfspaces, tolerances=None) -> "Polyhedron":
        tol = tolerances or DEFAULT_TOLERANCES
        return cls(hrep=HRep(tuple(halfspaces)), tolerances=tol)

    @property
    def dim(self) -> int:
        return self.hrep.dim

    def vertex_rep(self) -> VRep:
        """Current V-representation, refreshing it if halfspaces are pending."""
        if not self.dirty and self.vrep is not None:
            return self.vrep
        tol = self.tolerances
        if self._dd is None:
            rows = _homogenize(self.hrep)
            self._dd = _dd_init(rows, tol.feas)
            self._n_enumerated = len(self.hrep)
        else:
            pending = self.hrep.halfspaces[self._n_enumerated:]
            q = self.dim
            for h in pending:
                a, b = h.scaled_unit()
                row = np.empty(q + 1)
                row[:q] = a
                row[q] = -b
                row /= np.linalg.norm(row)
                _dd_insert(self._dd, row)
            self._n_enumerated = len(self.hrep)
        self.vrep = _dd_finalize(self._dd, self.dim, tol)
        self.dirty = False
        return self.vrep

    def vertices(self) -> np.ndarray:
        return self.vertex_rep().vertices

    def rays(self) -> np.ndarray:
        return self.vertex_rep().rays

    def contains(self, y: np.ndarray, tol: float | None = None) -> bool:
        return self.hrep.contains(y, tol)

    def max_violation(self, y: np.ndarray) -> float:
        A, b = self.hrep.as_matrix()
        scale = np.maximum(1.0, np.abs(b))
        return float(np.max((b - A @ y) / scale))

    def copy(self) -> "Polyhedron":
        return Polyhedron(
            hrep=self.hrep,
            tolerances=self.tolerances,
            vrep=self.vrep,
            dirty=self.dirty,
            _dd=self._dd.copy() if self._dd is not None else None,
            _n_enumerated=self._n_enumerated,
        )


def enumerate_vertices(hrep: HRep, tolerances: Tolerances | None = None) -> VRep:
    """Full H-to-V conversion by double description.

    Raises :class:`LineError` for non-pointed systems and :class:`EmptyError`
    for infeasible ones. Output is deterministic for a fixed halfspace order:
    vertices and rays are sorted lexicographically.
    """
    tol = tolerances or DEFAULT_TOLERANCES
    rows = _homogenize(hrep)
    state = _dd_init(rows, tol.feas)
    return _dd_finalize(state, hrep.dim, tol)


def _is_duplicate(h: HalfSpace, others, tol: float) -> bool:
    a, b = h.scaled_unit()
    for o in others:
        ao, bo = o.scaled_unit()
        if np.max(np.abs(a - ao)) <= tol and abs(b - bo) <= tol * max(1.0, abs(bo)):
            return True
    return False


def add_halfspace(poly: Polyhedron, h: HalfSpace) -> Polyhedron:
    """Intersect with one more halfspace.

    Duplicates (within the duplicate tolerance) leave the polyhedron
    unchanged. The result shares the enumeration state of ``poly`` so the
    next :meth:`Polyhedron.vertex_rep` call is incremental.
    """
    if _is_duplicate(h, poly.hrep.halfspaces, poly.tolerances.dup * 10):
        return poly
    return Polyhedron(
        hrep=HRep(poly.hrep.halfspaces + (h,)),
        tolerances=poly.tolerances,
        vrep=poly.vrep,
        dirty=True,
        _dd=poly._dd.copy() if poly._dd is not None else None,
        _n_enumerated=poly._n_enumerated,
    )


def remove_redundant(hrep: HRep, vrep: VRep,
                     tolerances: Tolerances | None = None) -> HRep:
    """Drop halfspaces not tight at any generator.

    A halfspace all of whose generators are strictly interior cannot touch
    the polyhedron, so removing it leaves the feasible set unchanged. Exact
    duplicates are also collapsed.
    """
    tol = tolerances or DEFAULT_TOLERANCES
    kept: list[HalfSpace] = []
    for h in hrep.halfspaces:
        a, b = h.scaled_unit()
        tight = False
        if vrep.num_vertices:
            resid = vrep.vertices @ a - b
            scale = np.maximum(1.0, np.abs(vrep.vertices).max(axis=1))
            tight = bool(np.any(np.abs(resid) <= tol.support * scale))
        if not tight and vrep.num_rays:
            tight = bool(np.any(np.abs(vrep.rays @ a) <= tol.support))
        if tight and not _is_duplicate(h, kept, tol.dup * 10):
            kept.append(h)
    if not kept:
        # nothing supported: keep the original system rather than return an
        # invalid empty H-rep (can only happen for a whole-space input)
        return hrep
    return HRep(tuple(kept))
