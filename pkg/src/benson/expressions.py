"""Convex expression trees for objectives and constraints.

Node kinds: constant, variable, affine, weighted sum, nonnegative scaling,
square, even power, exp, abs, PSD quadratic form and max-of-list. Convexity
is enforced structurally at construction time: nonlinear atoms take affine
arguments, sums and scalings use nonnegative weights on nonlinear terms.
Within those rules every tree is convex; `abs` and `max` are the only
sources of nonsmoothness, and both are piecewise linear in their (affine)
arguments, which is what makes the exact epigraph transcription in
:func:`lift_to_smooth` possible.

Signed linear combinations of objective components (needed for weighted-sum
scalarizations with non-orthant ordering cones, where dual-cone weights can
have negative entries) bypass the sign check via
:func:`signed_combination`; their convexity is the caller's contract.
"""

from __future__ import annotations

import numpy as np

from .errors import ConvexityError

__all__ = [
    "Expr", "Constant", "Variable", "Affine", "Sum", "Scale", "Square",
    "EvenPower", "Exp", "Abs", "QuadForm", "MaxOf", "signed_combination",
    "affine_coefficients", "lift_to_smooth", "parse_expr",
]

_TIE_TOL = 1e-12


def _grow(vec: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Zero-pad a coefficient vector to the length of the evaluation point."""
    out = np.zeros(len(x))
    out[: len(vec)] = vec
    return out


class Expr:
    """Base class. Subclasses are immutable after construction."""

    is_affine: bool = False
    is_smooth: bool = True

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def subgradient(self, x: np.ndarray) -> np.ndarray:
        """A valid subgradient at ``x`` (the gradient where smooth).

        Kink rules are fixed for determinism: ``abs`` at zero picks the zero
        subgradient, ``max`` at a tie averages the gradients of the tied
        branches.
        """
        raise NotImplementedError

    def hessian(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError(
            f"{type(self).__name__} has no Hessian (nonsmooth)")

    def max_var_index(self) -> int:
        return -1


class Constant(Expr):
    is_affine = True

    def __init__(self, value: float):
        self.c = float(value)

    def value(self, x):
        return self.c

    def subgradient(self, x):
        return np.zeros(len(x))

    def hessian(self, x):
        n = len(x)
        return np.zeros((n, n))


class Variable(Expr):
    is_affine = True

    def __init__(self, index: int):
        if index < 0:
            raise ConvexityError("variable index must be nonnegative")
        self.index = int(index)

    def value(self, x):
        return float(x[self.index])

    def subgradient(self, x):
        g = np.zeros(len(x))
        g[self.index] = 1.0
        return g

    def hessian(self, x):
        n = len(x)
        return np.zeros((n, n))

    def max_var_index(self):
        return self.index


class Affine(Expr):
    """coeffs . x + offset"""

    is_affine = True

    def __init__(self, coeffs, offset: float = 0.0):
        self.coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
        self.offset = float(offset)

    def value(self, x):
        n = len(self.coeffs)
        return float(self.coeffs @ x[:n]) + self.offset

    def subgradient(self, x):
        return _grow(self.coeffs, x)

    def hessian(self, x):
        n = len(x)
        return np.zeros((n, n))

    def max_var_index(self):
        nz = np.nonzero(np.abs(self.coeffs) > 0)[0]
        return int(nz[-1]) if nz.size else -1


def _require_affine(arg: Expr, op: str, location=None) -> None:
    if not arg.is_affine:
        raise ConvexityError(
            f"'{op}' requires an affine argument", location)


class Sum(Expr):
    """Weighted sum. Nonlinear terms must carry nonnegative weights."""

    def __init__(self, terms, weights=None, _signed: bool = False):
        terms = list(terms)
        if not terms:
            raise ConvexityError("empty sum")
        if weights is None:
            weights = np.ones(len(terms))
        weights = np.asarray(weights, dtype=float)
        if len(weights) != len(terms):
            raise ConvexityError("sum weights and terms differ in length")
        if not _signed:
            for w, t in zip(weights, terms):
                if w < 0 and not t.is_affine:
                    raise ConvexityError(
                        "negative weight on a nonlinear term breaks convexity")
        self.terms = terms
        self.weights = weights
        self.is_affine = all(t.is_affine for t in terms)
        self.is_smooth = all(
            t.is_smooth or abs(w) == 0.0 for w, t in zip(weights, terms))

    def value(self, x):
        return float(sum(w * t.value(x) for w, t in zip(self.weights, self.terms)))

    def subgradient(self, x):
        g = np.zeros(len(x))
        for w, t in zip(self.weights, self.terms):
            if w != 0.0:
                g += w * t.subgradient(x)
        return g

    def hessian(self, x):
        n = len(x)
        H = np.zeros((n, n))
        for w, t in zip(self.weights, self.terms):
            if w != 0.0:
                H += w * t.hessian(x)
        return H

    def max_var_index(self):
        return max((t.max_var_index() for t in self.terms), default=-1)


def signed_combination(weights, terms) -> Sum:
    """Linear combination without the nonnegativity check.

    Valid only when convexity is guaranteed externally, e.g. weighted sums
    w.G of a cone-convex objective map with w in the dual cone. Nonsmooth
    terms with negative weights are rejected: their epigraph transcription
    would be unsound.
    """
    weights = np.asarray(weights, dtype=float)
    for w, t in zip(weights, terms):
        if w < -1e-15 and not (t.is_smooth or t.is_affine):
            raise ConvexityError(
                "negative weight on a nonsmooth term is not supported")
    return Sum(list(terms), weights, _signed=True)


class Scale(Expr):
    """factor * arg; negative factors only on affine arguments."""

    def __init__(self, factor: float, arg: Expr):
        factor = float(factor)
        if factor < 0 and not arg.is_affine:
            raise ConvexityError(
                "negative scaling of a nonlinear term breaks convexity")
        self.factor = factor
        self.arg = arg
        self.is_affine = arg.is_affine
        self.is_smooth = arg.is_smooth or factor == 0.0

    def value(self, x):
        return self.factor * self.arg.value(x)

    def subgradient(self, x):
        return self.factor * self.arg.subgradient(x)

    def hessian(self, x):
        return self.factor * self.arg.hessian(x)

    def max_var_index(self):
        return self.arg.max_var_index()


class Square(Expr):
    def __init__(self, arg: Expr, location=None):
        _require_affine(arg, "square", location)
        self.arg = arg

    def value(self, x):
        return self.arg.value(x) ** 2

    def subgradient(self, x):
        return 2.0 * self.arg.value(x) * self.arg.subgradient(x)

    def hessian(self, x):
        a = self.arg.subgradient(x)
        return 2.0 * np.outer(a, a)

    def max_var_index(self):
        return self.arg.max_var_index()


class EvenPower(Expr):
    def __init__(self, arg: Expr, exponent: int, location=None):
        _require_affine(arg, "power", location)
        exponent = int(exponent)
        if exponent < 2 or exponent % 2 != 0:
            raise ConvexityError(
                "power exponent must be an even integer >= 2", location)
        self.arg = arg
        self.p = exponent

    def value(self, x):
        return self.arg.value(x) ** self.p

    def subgradient(self, x):
        u = self.arg.value(x)
        return self.p * u ** (self.p - 1) * self.arg.subgradient(x)

    def hessian(self, x):
        u = self.arg.value(x)
        a = self.arg.subgradient(x)
        return self.p * (self.p - 1) * u ** (self.p - 2) * np.outer(a, a)

    def max_var_index(self):
        return self.arg.max_var_index()


class Exp(Expr):
    def __init__(self, arg: Expr, location=None):
        _require_affine(arg, "exp", location)
        self.arg = arg

    def value(self, x):
        return float(np.exp(self.arg.value(x)))

    def subgradient(self, x):
        return np.exp(self.arg.value(x)) * self.arg.subgradient(x)

    def hessian(self, x):
        a = self.arg.subgradient(x)
        return np.exp(self.arg.value(x)) * np.outer(a, a)

    def max_var_index(self):
        return self.arg.max_var_index()


class Abs(Expr):
    is_smooth = False

    def __init__(self, arg: Expr, location=None):
        _require_affine(arg, "abs", location)
        self.arg = arg

    def value(self, x):
        return abs(self.arg.value(x))

    def subgradient(self, x):
        u = self.arg.value(x)
        s = 0.0 if u == 0.0 else float(np.sign(u))
        return s * self.arg.subgradient(x)

    def max_var_index(self):
        return self.arg.max_var_index()


class QuadForm(Expr):
    """u(x)' Q u(x) for a PSD matrix Q and affine components u_i(x)."""

    def __init__(self, matrix, args, location=None):
        Q = np.asarray(matrix, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ConvexityError("quadratic form matrix must be square",
                                 location)
        if not np.allclose(Q, Q.T, atol=1e-10):
            raise ConvexityError("quadratic form matrix must be symmetric",
                                 location)
        if np.linalg.eigvalsh(Q).min() < -1e-9:
            raise ConvexityError("quadratic form matrix must be PSD", location)
        args = list(args)
        if len(args) != Q.shape[0]:
            raise ConvexityError(
                "quadratic form needs one affine argument per matrix row",
                location)
        for a in args:
            _require_affine(a, "quad_form", location)
        self.Q = Q
        self.args = args

    def _u(self, x):
        return np.array([a.value(x) for a in self.args])

    def _jac(self, x):
        return np.array([a.subgradient(x) for a in self.args])

    def value(self, x):
        u = self._u(x)
        return float(u @ self.Q @ u)

    def subgradient(self, x):
        return 2.0 * (self._jac(x).T @ (self.Q @ self._u(x)))

    def hessian(self, x):
        A = self._jac(x)
        return 2.0 * A.T @ self.Q @ A

    def max_var_index(self):
        return max((a.max_var_index() for a in self.args), default=-1)


class MaxOf(Expr):
    """Pointwise maximum of convex terms."""

    is_smooth = False

    def __init__(self, terms, location=None):
        terms = list(terms)
        if not terms:
            raise ConvexityError("empty max", location)
        self.terms = terms
        self.is_affine = False

    def value(self, x):
        return max(t.value(x) for t in self.terms)

    def _active(self, x):
        vals = np.array([t.value(x) for t in self.terms])
        vmax = vals.max()
        tol = _TIE_TOL * max(1.0, abs(vmax))
        return np.where(vals >= vmax - tol)[0]

    def subgradient(self, x):
        act = self._active(x)
        g = np.zeros(len(x))
        for i in act:
            g += self.terms[i].subgradient(x)
        return g / len(act)

    def max_var_index(self):
        return max((t.max_var_index() for t in self.terms), default=-1)


# --------------------------------------------------------------------------
# Affine extraction and epigraph transcription.
# --------------------------------------------------------------------------

def affine_coefficients(expr: Expr, n: int) -> tuple[np.ndarray, float]:
    """(c, b) with expr(x) = c.x + b, for affine trees only."""
    if not expr.is_affine:
        raise ConvexityError("expression is not affine")
    x0 = np.zeros(n)
    b = expr.value(x0)
    c = expr.subgradient(x0)
    return c[:n], float(b)


class _LiftContext:
    def __init__(self, n: int):
        self.next_index = n
        self.rows: list[Expr] = []
        self.seen: dict[int, Expr] = {}
        self.aux_atoms: list[tuple[int, Expr]] = []

    def fresh(self, atom: Expr) -> int:
        i = self.next_index
        self.next_index += 1
        self.aux_atoms.append((i, atom))
        return i


def _lift(expr: Expr, ctx: _LiftContext) -> Expr:
    if expr.is_smooth:
        return expr
    cached = ctx.seen.get(id(expr))
    if cached is not None:
        return cached
    if isinstance(expr, Abs):
        # |u| -> s with u <= s, -u <= s; exact because the surrounding
        # context is monotone in the atom's value (whitelist rules)
        s = ctx.fresh(expr)
        svar = Variable(s)
        ctx.rows.append(Sum([expr.arg, svar], [1.0, -1.0], _signed=True))
        ctx.rows.append(Sum([expr.arg, svar], [-1.0, -1.0], _signed=True))
        out: Expr = svar
    elif isinstance(expr, MaxOf):
        s = ctx.fresh(expr)
        svar = Variable(s)
        for t in expr.terms:
            lifted = _lift(t, ctx)
            ctx.rows.append(Sum([lifted, svar], [1.0, -1.0], _signed=True))
        out = svar
    elif isinstance(expr, Sum):
        out = Sum([_lift(t, ctx) for t in expr.terms], expr.weights,
                  _signed=True)
    elif isinstance(expr, Scale):
        out = Scale(expr.factor, _lift(expr.arg, ctx))
    else:
        raise ConvexityError(
            f"cannot transcribe nonsmooth node {type(expr).__name__}")
    ctx.seen[id(expr)] = out
    return out


def lift_to_smooth(objective: Expr, constraints: list[Expr], n: int):
    """Exact smooth reformulation of a program with abs/max atoms.

    Every nonsmooth atom (piecewise linear by the whitelist) is replaced by
    an epigraph variable and linear rows. Returns ``(objective, constraints,
    extra_rows, n_total, aux_atoms)``; the first ``len(constraints)``
    entries of the returned constraint list map one-to-one onto the
    originals, so their multipliers transfer directly. ``aux_atoms`` pairs
    each auxiliary variable index with the atom whose value initializes it.
    """
    ctx = _LiftContext(n)
    obj = _lift(objective, ctx)
    cons = [_lift(c, ctx) for c in constraints]
    return obj, cons, list(ctx.rows), ctx.next_index, list(ctx.aux_atoms)


# --------------------------------------------------------------------------
# JSON parsing (documented prefix schema).
# --------------------------------------------------------------------------

_WHITELIST = ("const", "var", "affine", "sum", "scale", "mul_const",
              "square", "power", "exp", "abs", "quad_form", "max")


def _need(obj: dict, key: str, path: str):
    if key not in obj:
        from .errors import ParseError
        raise ParseError(f"missing field '{key}'", path)
    return obj[key]


def parse_expr(obj, n: int, path: str = "expr") -> Expr:
    """Parse one prefix-JSON expression node, validating convexity.

    Operators outside the convex whitelist raise :class:`ConvexityError`
    naming the node path; structural problems raise :class:`ParseError`.
    """
    from .errors import ParseError

    if not isinstance(obj, dict):
        raise ParseError("expression node must be an object", path)
    op = _need(obj, "op", path)
    if op not in _WHITELIST:
        raise ConvexityError(
            f"operator '{op}' is not in the convex whitelist", path)

    if op == "const":
        return Constant(_need(obj, "value", path))
    if op == "var":
        idx = int(_need(obj, "index", path))
        if idx < 0 or idx >= n:
            raise ParseError(f"variable index {idx} out of range [0, {n})",
                             path)
        return Variable(idx)
    if op == "affine":
        coeffs = np.asarray(_need(obj, "coeffs", path), dtype=float)
        if coeffs.ndim != 1 or len(coeffs) > n:
            raise ParseError(
                f"affine coeffs must be a vector of length <= {n}", path)
        return Affine(coeffs, obj.get("offset", 0.0))
    if op == "sum":
        terms_obj = _need(obj, "terms", path)
        if not isinstance(terms_obj, list) or not terms_obj:
            raise ParseError("sum needs a non-empty term list", path)
        terms = [parse_expr(t, n, f"{path}.terms[{i}]")
                 for i, t in enumerate(terms_obj)]
        weights = obj.get("weights")
        try:
            return Sum(terms, weights)
        except ConvexityError as e:
            raise ConvexityError(str(e), path) from None
    if op in ("scale", "mul_const"):
        arg = parse_expr(_need(obj, "arg", path), n, f"{path}.arg")
        try:
            return Scale(_need(obj, "factor", path), arg)
        except ConvexityError as e:
            raise ConvexityError(str(e), path) from None
    if op == "square":
        return Square(parse_expr(_need(obj, "arg", path), n, f"{path}.arg"),
                      path)
    if op == "power":
        return EvenPower(
            parse_expr(_need(obj, "arg", path), n, f"{path}.arg"),
            _need(obj, "exponent", path), path)
    if op == "exp":
        return Exp(parse_expr(_need(obj, "arg", path), n, f"{path}.arg"),
                   path)
    if op == "abs":
        return Abs(parse_expr(_need(obj, "arg", path), n, f"{path}.arg"),
                   path)
    if op == "quad_form":
        args_obj = _need(obj, "args", path)
        args = [parse_expr(a, n, f"{path}.args[{i}]")
                for i, a in enumerate(args_obj)]
        return QuadForm(_need(obj, "matrix", path), args, path)
    if op == "max":
        terms_obj = _need(obj, "terms", path)
        if not isinstance(terms_obj, list) or not terms_obj:
            raise ParseError("max needs a non-empty term list", path)
        return MaxOf([parse_expr(t, n, f"{path}.terms[{i}]")
                      for i, t in enumerate(terms_obj)], path)
    raise ParseError(f"unhandled operator '{op}'", path)  # pragma: no cover
