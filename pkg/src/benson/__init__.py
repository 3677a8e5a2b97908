"""Polyhedral approximation of bounded convex vector optimization problems.

The package computes finite epsilon-solutions of a convex vector
optimization problem and of its geometric dual, together with inner and
outer polyhedral approximations of the upper and lower images, by primal
and dual Benson-type outer approximation. One scalar convex program is
solved per engine step.
"""

from .certification import CertificationReport, certify, sample_feasible
from .config import DEFAULT_TOLERANCES, Tolerances
from .cones import OrderingCone, reduce_constraint_cone
from .duality import DualFrame, dual_outer_from_primal, primal_outer_from_dual
from .engine import (
    DualRecord,
    EpsilonSolution,
    PrimalRecord,
    RunConfig,
    RunStats,
    initialize_dual,
    initialize_primal,
    run,
    run_dual,
    run_primal,
)
from .errors import (
    BensonError,
    ConeError,
    ConeMembershipError,
    ConvexityError,
    CutValidationError,
    DomainError,
    DualUnboundedError,
    EmptyError,
    EngineError,
    InfeasibleProblemError,
    InitUnboundedError,
    LineError,
    MaxIterationsError,
    ParseError,
    VerticalCutError,
    VerticalInitError,
    WNormalizationError,
    ZeroNormalError,
)
from .expressions import (
    Abs,
    Affine,
    Constant,
    EvenPower,
    Exp,
    Expr,
    MaxOf,
    QuadForm,
    Scale,
    Square,
    Sum,
    Variable,
    affine_coefficients,
    lift_to_smooth,
    parse_expr,
    signed_combination,
)
from .io import load_bundle, load_problem, packaged_problem, save_bundle
from .polyhedra import (
    HalfSpace,
    HRep,
    Polyhedron,
    VRep,
    add_halfspace,
    enumerate_vertices,
    lex_order,
    remove_redundant,
)
from .problem import CvopProblem
from .scalar_solver import (
    ConeDualSolution,
    ScalarProgram,
    ScalarSolution,
    Status,
    phase1,
    solve,
    solve_with_cone_duals,
)
from .scalarize import (
    lagrangian_dual_value,
    projection_program,
    validate_weight,
    weighted_sum_program,
)

__version__ = "0.1.0"
