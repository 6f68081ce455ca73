"""Base kernel functions and the algebra of composite kernel expressions.

Five base families (RBF, dot product, rational quadratic, periodic, Matern
with half-integer smoothness) plus sum/product trees with positive
combination coefficients, a canonical text serialization, and a parser.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial.distance import cdist

from .gp import KernelFn, ParamVector

__all__ = [
    "BASE_KINDS",
    "Leaf",
    "Sum",
    "Prod",
    "new_leaf",
    "eval_rbf",
    "eval_dot",
    "eval_rq",
    "eval_periodic",
    "eval_matern",
    "eval_expr",
    "gram_expr",
    "param_vector",
    "with_params",
    "n_leaves",
    "serialize",
    "parse",
    "ClassicalKernel",
]

# kind -> (display token, shape-parameter names)
_KIND_PARAMS = {
    "RBF": ("th",),
    "DOT": (),
    "RQ": ("al", "l"),
    "PER": ("p", "l"),
    "MAT12": ("l",),
    "MAT32": ("l",),
    "MAT52": ("l",),
}
BASE_KINDS = tuple(_KIND_PARAMS)

_MATERN_NU = {"MAT12": 0.5, "MAT32": 1.5, "MAT52": 2.5}

COEF_BOUNDS = (1e-3, 1e3)
SHAPE_BOUNDS = (1e-2, 1e2)
PERIOD_BOUNDS = (1e-1, 1e1)  # multiplied by the data's median pairwise distance


# ---------------------------------------------------------------------------
# scalar base kernels

def eval_rbf(x, xp, theta):
    """exp(-theta * ||x - x'||^2)."""
    d2 = float(np.sum((np.asarray(x, float) - np.asarray(xp, float)) ** 2))
    return math.exp(-theta * d2)


def eval_dot(x, xp):
    """Inner product x^T x'."""
    return float(np.dot(np.asarray(x, float), np.asarray(xp, float)))


def eval_rq(x, xp, alpha, l):
    """Rational quadratic (1 + d^2 / (2 alpha l^2))^(-alpha)."""
    d2 = float(np.sum((np.asarray(x, float) - np.asarray(xp, float)) ** 2))
    return (1.0 + d2 / (2.0 * alpha * l * l)) ** (-alpha)


def eval_periodic(x, xp, p, l):
    """exp(-2 sin^2(pi d / p) / l^2)."""
    d = float(np.linalg.norm(np.asarray(x, float) - np.asarray(xp, float)))
    return math.exp(-2.0 * math.sin(math.pi * d / p) ** 2 / (l * l))


def eval_matern(x, xp, nu, l):
    """Matern closed forms for nu in {1/2, 3/2, 5/2}; r = d(x, x') / l."""
    d = float(np.linalg.norm(np.asarray(x, float) - np.asarray(xp, float)))
    return _matern_r(np.asarray(d / l), nu).item()


def _matern_r(r, nu):
    if nu == 0.5:
        return np.exp(-r)
    if nu == 1.5:
        a = math.sqrt(3.0) * r
        return (1.0 + a) * np.exp(-a)
    if nu == 2.5:
        a = math.sqrt(5.0) * r
        return (1.0 + a + 5.0 * r * r / 3.0) * np.exp(-a)
    raise ValueError(f"unsupported Matern nu={nu}; use 1/2, 3/2 or 5/2")


# ---------------------------------------------------------------------------
# expression trees

@dataclass(frozen=True)
class Leaf:
    """A base kernel with current shape-parameter values and optional coefficient."""

    kind: str
    params: tuple
    coef: float | None = None

    def __post_init__(self):
        if self.kind not in _KIND_PARAMS:
            raise ValueError(f"unknown base kernel kind {self.kind!r}")
        if len(self.params) != len(_KIND_PARAMS[self.kind]):
            raise ValueError(
                f"{self.kind} takes {len(_KIND_PARAMS[self.kind])} parameters")


@dataclass(frozen=True)
class Sum:
    left: object
    right: object
    coef: float | None = None


@dataclass(frozen=True)
class Prod:
    left: object
    right: object
    coef: float | None = None


def new_leaf(kind, coef=1.0):
    """A fresh leaf with unit shape parameters."""
    return Leaf(kind=kind, params=tuple(1.0 for _ in _KIND_PARAMS[kind]), coef=coef)


def ensure_coef(expr):
    """Attach a unit coefficient slot if the node has none."""
    return expr if expr.coef is not None else replace(expr, coef=1.0)


def n_leaves(expr):
    if isinstance(expr, Leaf):
        return 1
    return n_leaves(expr.left) + n_leaves(expr.right)


# ---------------------------------------------------------------------------
# evaluation

def eval_expr(expr, x, xp):
    """Recursive scalar evaluation of a kernel expression."""
    c = 1.0 if expr.coef is None else expr.coef
    if isinstance(expr, Leaf):
        return c * _leaf_scalar(expr, x, xp)
    if isinstance(expr, Sum):
        return c * (eval_expr(expr.left, x, xp) + eval_expr(expr.right, x, xp))
    return c * eval_expr(expr.left, x, xp) * eval_expr(expr.right, x, xp)


def _leaf_scalar(leaf, x, xp):
    k, p = leaf.kind, leaf.params
    if k == "RBF":
        return eval_rbf(x, xp, p[0])
    if k == "DOT":
        return eval_dot(x, xp)
    if k == "RQ":
        return eval_rq(x, xp, p[0], p[1])
    if k == "PER":
        return eval_periodic(x, xp, p[0], p[1])
    return eval_matern(x, xp, _MATERN_NU[k], p[0])


def gram_expr(expr, X, X2):
    """Vectorized Gram matrix of a kernel expression."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    X2 = np.atleast_2d(np.asarray(X2, dtype=float))
    d2 = cdist(X, X2, "sqeuclidean")
    cache = {"d2": d2, "d": np.sqrt(np.maximum(d2, 0.0)), "dot": X @ X2.T}
    return _gram_rec(expr, cache)


def _gram_rec(expr, cache):
    c = 1.0 if expr.coef is None else expr.coef
    if isinstance(expr, Sum):
        return c * (_gram_rec(expr.left, cache) + _gram_rec(expr.right, cache))
    if isinstance(expr, Prod):
        return c * _gram_rec(expr.left, cache) * _gram_rec(expr.right, cache)
    k, p = expr.kind, expr.params
    if k == "RBF":
        out = np.exp(-p[0] * cache["d2"])
    elif k == "DOT":
        out = cache["dot"].copy()
    elif k == "RQ":
        out = (1.0 + cache["d2"] / (2.0 * p[0] * p[1] ** 2)) ** (-p[0])
    elif k == "PER":
        out = np.exp(-2.0 * np.sin(np.pi * cache["d"] / p[0]) ** 2 / p[1] ** 2)
    else:
        out = _matern_r(cache["d"] / p[0], _MATERN_NU[k])
    return c * out


# ---------------------------------------------------------------------------
# parameter flattening

def param_vector(expr, p_scale=1.0) -> ParamVector:
    """Flatten all coefficients and shape parameters in deterministic pre-order."""
    names, values, lower, upper, scales = [], [], [], [], []

    def visit(node, path):
        if node.coef is not None:
            names.append(f"{path}.c")
            values.append(node.coef)
            lower.append(COEF_BOUNDS[0])
            upper.append(COEF_BOUNDS[1])
            scales.append("log")
        if isinstance(node, Leaf):
            for nm, v in zip(_KIND_PARAMS[node.kind], node.params):
                names.append(f"{path}.{nm}")
                values.append(v)
                if node.kind == "PER" and nm == "p":
                    lower.append(PERIOD_BOUNDS[0] * p_scale)
                    upper.append(PERIOD_BOUNDS[1] * p_scale)
                else:
                    lower.append(SHAPE_BOUNDS[0])
                    upper.append(SHAPE_BOUNDS[1])
                scales.append("log")
        else:
            visit(node.left, path + "l")
            visit(node.right, path + "r")

    visit(expr, "n")
    return ParamVector(names=tuple(names), values=np.array(values),
                       lower=np.array(lower), upper=np.array(upper),
                       scales=tuple(scales))


def with_params(expr, values):
    """Rebuild the expression with flattened parameter values re-inserted."""
    values = np.asarray(values, dtype=float).ravel()
    pos = 0

    def take():
        nonlocal pos
        if pos >= values.size:
            raise ValueError("too few parameter values for expression")
        v = float(values[pos])
        pos += 1
        return v

    def rebuild(node):
        coef = take() if node.coef is not None else None
        if isinstance(node, Leaf):
            params = tuple(take() for _ in _KIND_PARAMS[node.kind])
            return Leaf(kind=node.kind, params=params, coef=coef)
        left = rebuild(node.left)
        right = rebuild(node.right)
        return type(node)(left=left, right=right, coef=coef)

    out = rebuild(expr)
    if pos != values.size:
        raise ValueError(
            f"expected {pos} parameter values, got {values.size}")
    return out


# ---------------------------------------------------------------------------
# canonical text form

def _fmt(v):
    return repr(float(v))


def serialize(expr) -> str:
    """Canonical text form, round-trip exact through ``parse``."""
    if isinstance(expr, Leaf):
        body = expr.kind
        names = _KIND_PARAMS[expr.kind]
        if names:
            body += "[" + ",".join(f"{n}={_fmt(v)}" for n, v in
                                   zip(names, expr.params)) + "]"
    else:
        op = " + " if isinstance(expr, Sum) else " * "
        body = "(" + serialize(expr.left) + op + serialize(expr.right) + ")"
    if expr.coef is not None:
        return f"{_fmt(expr.coef)}*{body}"
    return body


_TOKEN = re.compile(r"\s*(?:(?P<num>[0-9]+(?:\.[0-9]*)?(?:[eE][+-]?[0-9]+)?)"
                    r"|(?P<ident>[A-Za-z][A-Za-z0-9]*)"
                    r"|(?P<sym>[()\[\]=,+*]))")


def _tokenize(s):
    out, pos = [], 0
    while pos < len(s):
        m = _TOKEN.match(s, pos)
        if not m:
            if s[pos:].strip() == "":
                break
            raise ValueError(f"cannot tokenize kernel expression at {s[pos:]!r}")
        pos = m.end()
        if m.group("num") is not None:
            out.append(("num", float(m.group("num"))))
        elif m.group("ident") is not None:
            out.append(("ident", m.group("ident")))
        else:
            out.append(("sym", m.group("sym")))
    return out


class _Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.pos = 0

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else (None, None)

    def next(self):
        t = self.peek()
        self.pos += 1
        return t

    def expect(self, sym):
        kind, val = self.next()
        if kind != "sym" or val != sym:
            raise ValueError(f"expected {sym!r} in kernel expression, got {val!r}")

    def node(self):
        coef = None
        if self.peek()[0] == "num":
            coef = self.next()[1]
            self.expect("*")
        kind, val = self.peek()
        if kind == "sym" and val == "(":
            self.next()
            left = self.node()
            op_kind, op = self.next()
            if op_kind != "sym" or op not in "+*":
                raise ValueError(f"expected + or * in kernel expression, got {op!r}")
            right = self.node()
            self.expect(")")
            cls = Sum if op == "+" else Prod
            return cls(left=left, right=right, coef=coef)
        if kind != "ident":
            raise ValueError(f"expected base kernel name, got {val!r}")
        self.next()
        if val not in _KIND_PARAMS:
            raise ValueError(f"unknown base kernel {val!r}")
        names = _KIND_PARAMS[val]
        params = []
        if names:
            self.expect("[")
            for i, nm in enumerate(names):
                k2, v2 = self.next()
                if k2 != "ident" or v2 != nm:
                    raise ValueError(f"expected parameter {nm!r}, got {v2!r}")
                self.expect("=")
                k3, v3 = self.next()
                if k3 != "num":
                    raise ValueError("expected numeric parameter value")
                params.append(v3)
                if i < len(names) - 1:
                    self.expect(",")
            self.expect("]")
        return Leaf(kind=val, params=tuple(params), coef=coef)


def parse(s: str):
    """Parse the canonical text form back into an expression tree."""
    p = _Parser(_tokenize(s))
    expr = p.node()
    if p.pos != len(p.toks):
        raise ValueError("trailing tokens in kernel expression")
    return expr


# ---------------------------------------------------------------------------
# KernelFn adapter

@dataclass(frozen=True)
class ClassicalKernel(KernelFn):
    """KernelFn view of a composite expression; parameters supplied externally."""

    expr: object
    p_scale: float = 1.0

    def default_params(self) -> ParamVector:
        return param_vector(self.expr, self.p_scale)

    def eval(self, x, xp, params: ParamVector) -> float:
        return eval_expr(with_params(self.expr, params.values), x, xp)

    def gram(self, X, X2, params: ParamVector) -> np.ndarray:
        return gram_expr(with_params(self.expr, params.values), X, X2)
