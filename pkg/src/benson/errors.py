"""Exception hierarchy shared across the package."""


class BensonError(Exception):
    """Base class for all package errors."""


# ---------------------------------------------------------------- geometry

class GeometryError(BensonError):
    pass


class LineError(GeometryError):
    """The polyhedron contains a line, so it has no vertex."""


class EmptyError(GeometryError):
    """The halfspace system is infeasible."""


class ZeroNormalError(GeometryError):
    """A halfspace normal collapsed to (numerically) zero."""


# ------------------------------------------------------------------- model

class ModelError(BensonError):
    pass


class ParseError(ModelError):
    """Malformed problem file. Carries the document path of the offender."""

    def __init__(self, message, location=None):
        self.location = location
        if location:
            message = f"{message} (at {location})"
        super().__init__(message)


class ConvexityError(ModelError):
    """An expression violates the convex composition whitelist."""

    def __init__(self, message, location=None):
        self.location = location
        if location:
            message = f"{message} (at {location})"
        super().__init__(message)


class DomainError(ModelError):
    """Evaluation point lies outside the declared variable box."""


class ConeError(ModelError):
    """Invalid ordering cone data."""


class ConeMembershipError(ConeError):
    """A weight vector is not a usable member of the dual cone."""


class InfeasibleProblemError(ModelError):
    """The loaded problem has an empty feasible set."""


# ------------------------------------------------------------------ solver

class SolverError(BensonError):
    pass


class WNormalizationError(SolverError):
    """Recovered cut normal drifted too far from the c-normalization."""


# ------------------------------------------------------------------ engine

class EngineError(BensonError):
    pass


class InitUnboundedError(EngineError):
    """An initialization scalarization is unbounded: the problem is not
    bounded, so the approximation algorithms do not apply."""


class CutValidationError(EngineError):
    """A computed supporting halfspace excludes an already certified inner
    point, i.e. the recovered multipliers were unusable."""


class VerticalInitError(EngineError):
    """The initial supporting hyperplane of the lower image is numerically
    vertical (solver drift on a scalarization without attained optimum)."""


class VerticalCutError(EngineError):
    """A dual-space cut is numerically vertical and cannot shrink the
    outer approximation."""


class DualUnboundedError(EngineError):
    """A weighted-sum scalarization met during the dual algorithm is
    unbounded below."""


class MaxIterationsError(EngineError):
    """Iteration cap reached. Carries the partial solution and the error
    level that was actually achieved."""

    def __init__(self, message, partial=None, achieved_epsilon=None):
        super().__init__(message)
        self.partial = partial
        self.achieved_epsilon = achieved_epsilon
