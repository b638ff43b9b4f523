"""Small expression language for curve components.

Grammar (s is the curve parameter, u the bound variable of an integral):

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := base ('^' factor)?            # '^' right-associative
    base   := NUMBER | 's' | 'u' | func '(' args ')' | '(' expr ')' | '-' base

Functions: sin, cos, tan, sqrt, ln, exp, abs, and the definite integral
``integral(f(u), a, s)`` whose integrand is written in u, whose lower bound is
a constant expression and whose upper bound is literally ``s``. Because the
upper bound must be the outer variable, integrals cannot nest.

Note the grammar makes unary minus part of ``base``, so ``-s^2`` parses as
``(-s)^2``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .numerics import SampleGrid, adaptive_simpson

__all__ = [
    "ExprNode",
    "ParseDiagnostic",
    "ExpressionSyntaxError",
    "EvaluationDomainError",
    "parse_expression",
    "evaluate",
    "evaluate_on_grid",
    "evaluate_sorted",
    "to_text",
]

FUNCTIONS = ("sin", "cos", "tan", "sqrt", "ln", "exp", "abs")


@dataclass(frozen=True)
class ExprNode:
    """Immutable expression tree node.

    kind is one of "const", "var", "neg", "binary", "call", "integral".
    ``name`` holds the variable name, operator symbol or function name;
    ``value`` is only meaningful for constants. An integral node has children
    (integrand, lower_bound); its upper bound is implicitly the parameter s.
    """

    kind: str
    value: float = 0.0
    name: str = ""
    children: tuple = field(default=())


@dataclass(frozen=True)
class ParseDiagnostic:
    offset: int
    message: str
    expected: str = ""

    def __str__(self):
        expected = f" (expected {self.expected})" if self.expected else ""
        return f"syntax error at offset {self.offset}: {self.message}{expected}"


class ExpressionSyntaxError(ValueError):
    def __init__(self, diagnostic):
        super().__init__(str(diagnostic))
        self.diagnostic = diagnostic


class EvaluationDomainError(ArithmeticError):
    """Domain failure (sqrt of a negative, ln of a non-positive, zero divide)
    with the offending subexpression attached."""

    def __init__(self, message, subexpression, at=None):
        where = f" at s={at:.6g}" if at is not None else ""
        super().__init__(f"{message} in '{subexpression}'{where}")
        self.subexpression = subexpression
        self.at = at


_TOKEN_RE = re.compile(r"""
      (?P<number>\d+\.\d*([eE][+-]?\d+)?|\.\d+([eE][+-]?\d+)?|\d+([eE][+-]?\d+)?)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<op>[-+*/^(),])
    | (?P<space>\s+)
    | (?P<bad>.)
""", re.VERBOSE)


def _tokenize(text):
    tokens = []
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        if kind == "space":
            continue
        if kind == "bad":
            raise ExpressionSyntaxError(ParseDiagnostic(m.start(), f"unexpected character {m.group()!r}"))
        tokens.append((kind, m.group(), m.start()))
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, variable="s"):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.variable = variable

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        if tok[0] != "end":
            self.pos += 1
        return tok

    def fail(self, message, expected=""):
        raise ExpressionSyntaxError(ParseDiagnostic(self.peek()[2], message, expected))

    def expect_op(self, symbol):
        kind, value, offset = self.peek()
        if kind != "op" or value != symbol:
            self.fail(f"found {value!r}" if kind != "end" else "unexpected end of input",
                      expected=repr(symbol))
        return self.advance()

    # grammar --------------------------------------------------------------

    def parse(self):
        node = self.expr()
        kind, value, offset = self.peek()
        if kind != "end":
            self.fail(f"trailing input {value!r}", expected="end of expression")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.advance()[1]
            node = ExprNode("binary", name=op, children=(node, self.term()))
        return node

    def term(self):
        node = self.factor()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.advance()[1]
            node = ExprNode("binary", name=op, children=(node, self.factor()))
        return node

    def factor(self):
        node = self.base()
        if self.peek()[:2] == ("op", "^"):
            self.advance()
            node = ExprNode("binary", name="^", children=(node, self.factor()))
        return node

    def base(self):
        kind, value, offset = self.peek()
        if kind == "number":
            self.advance()
            return ExprNode("const", value=float(value))
        if kind == "op" and value == "-":
            self.advance()
            return ExprNode("neg", children=(self.base(),))
        if kind == "op" and value == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        if kind == "ident":
            self.advance()
            if value == self.variable:
                return ExprNode("var", name=value)
            if value == "integral":
                return self.integral(offset)
            if value in FUNCTIONS:
                self.expect_op("(")
                if self.peek()[:2] == ("op", ")"):
                    self.fail("empty argument list", expected="expression")
                arg = self.expr()
                self.expect_op(")")
                return ExprNode("call", name=value, children=(arg,))
            raise ExpressionSyntaxError(
                ParseDiagnostic(offset, f"unknown identifier {value!r}"))
        if kind == "end":
            self.fail("unexpected end of input", expected="expression")
        self.fail(f"found {value!r}", expected="expression")

    def integral(self, offset):
        if self.variable != "s":
            raise ExpressionSyntaxError(ParseDiagnostic(offset, "integrals cannot nest"))
        self.expect_op("(")
        saved = self.variable
        self.variable = "u"
        integrand = self.expr()
        self.variable = saved
        self.expect_op(",")
        lower = self.expr()
        if _depends_on(lower, "s") or _depends_on(lower, "u"):
            raise ExpressionSyntaxError(
                ParseDiagnostic(offset, "integral lower bound must be constant"))
        self.expect_op(",")
        kind, value, off = self.peek()
        if (kind, value) != ("ident", "s"):
            self.fail("integral upper bound must be the variable s", expected="'s'")
        self.advance()
        self.expect_op(")")
        return ExprNode("integral", children=(integrand, lower))


def _depends_on(node, name):
    if node.kind == "var":
        return node.name == name
    return any(_depends_on(child, name) for child in node.children)


def parse_expression(text, variable="s"):
    """Parse an expression in the curve parameter; raises ExpressionSyntaxError
    carrying a ParseDiagnostic (offset, message, expected summary) on the first
    syntax error."""
    if not text or not text.strip():
        raise ExpressionSyntaxError(ParseDiagnostic(0, "empty expression"))
    return _Parser(text, variable).parse()


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

_INTEGRAL_CACHE = {}


def _check(ok, message, node, at):
    if not bool(ok):
        raise EvaluationDomainError(message, to_text(node), at=at)


def _eval_scalar(node, env, quad_tol):
    kind = node.kind
    if kind == "const":
        return node.value
    if kind == "var":
        return env[node.name]
    if kind == "neg":
        return -_eval_scalar(node.children[0], env, quad_tol)
    if kind == "binary":
        a = _eval_scalar(node.children[0], env, quad_tol)
        b = _eval_scalar(node.children[1], env, quad_tol)
        return _apply_binary(node, a, b, env.get("s", env.get("u")))
    if kind == "call":
        x = _eval_scalar(node.children[0], env, quad_tol)
        return _apply_call(node, x, env.get("s", env.get("u")))
    if kind == "integral":
        integrand, lower = node.children
        a = _eval_scalar(lower, {}, quad_tol)
        s = env["s"]
        return adaptive_simpson(lambda u: _eval_scalar(integrand, {"u": u}, quad_tol),
                                a, s, abs_tol=quad_tol)
    raise AssertionError(f"unknown node kind {kind!r}")


def _apply_binary(node, a, b, at):
    op = node.name
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        _check(np.all(b != 0), "division by zero", node, at)
        return a / b
    if op == "^":
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.power(a, b)
        _check(np.all(np.isfinite(out)), "invalid power", node, at)
        return out
    raise AssertionError(f"unknown operator {op!r}")


def _apply_call(node, x, at):
    name = node.name
    if name == "sin":
        return np.sin(x)
    if name == "cos":
        return np.cos(x)
    if name == "tan":
        return np.tan(x)
    if name == "sqrt":
        _check(np.all(np.asarray(x) >= 0), "square root of a negative value", node, at)
        return np.sqrt(x)
    if name == "ln":
        _check(np.all(np.asarray(x) > 0), "logarithm of a non-positive value", node, at)
        return np.log(x)
    if name == "exp":
        return np.exp(x)
    if name == "abs":
        return np.abs(x)
    raise AssertionError(f"unknown function {name!r}")


def evaluate(expr, s, quad_tol=1e-10):
    """Evaluate the expression at a single parameter value."""
    return float(_eval_scalar(expr, {"s": float(s)}, quad_tol))


def _first_bad(values, mask):
    idx = np.nonzero(~mask)[0]
    return None if idx.size == 0 else int(idx[0])


def _eval_vector(node, s_values, grid, quad_tol):
    kind = node.kind
    if kind == "const":
        return np.full(s_values.shape, node.value)
    if kind == "var":
        return s_values.copy()
    if kind == "neg":
        return -_eval_vector(node.children[0], s_values, grid, quad_tol)
    if kind == "binary":
        a = _eval_vector(node.children[0], s_values, grid, quad_tol)
        b = _eval_vector(node.children[1], s_values, grid, quad_tol)
        if node.name == "/":
            bad = _first_bad(s_values, b != 0)
            if bad is not None:
                raise EvaluationDomainError("division by zero", to_text(node), at=s_values[bad])
        if node.name == "^":
            with np.errstate(invalid="ignore", divide="ignore"):
                out = np.power(a, b)
            bad = _first_bad(s_values, np.isfinite(out))
            if bad is not None:
                raise EvaluationDomainError("invalid power", to_text(node), at=s_values[bad])
            return out
        return _apply_binary(node, a, b, None)
    if kind == "call":
        x = _eval_vector(node.children[0], s_values, grid, quad_tol)
        if node.name == "sqrt":
            bad = _first_bad(s_values, x >= 0)
            if bad is not None:
                raise EvaluationDomainError("square root of a negative value",
                                            to_text(node), at=s_values[bad])
        if node.name == "ln":
            bad = _first_bad(s_values, x > 0)
            if bad is not None:
                raise EvaluationDomainError("logarithm of a non-positive value",
                                            to_text(node), at=s_values[bad])
        return _apply_call(node, x, None)
    if kind == "integral":
        return _integral_at_sorted(node, s_values, quad_tol,
                                   cache_key=(node,) + grid_key(grid) if grid is not None else None)
    raise AssertionError(f"unknown node kind {kind!r}")


def grid_key(grid):
    return (grid.start, grid.step, grid.n)


def _integral_at_sorted(node, s_values, quad_tol, cache_key=None):
    """Running integral of the integrand at every point of an ascending array.

    The lower-bound-to-first-point piece uses the scalar adaptive routine;
    after that each panel between consecutive points is refined independently
    with Simpson doubling, vectorized over panels, until every panel meets its
    share of the absolute tolerance. Grid evaluations are memoized per
    (expr, grid) so realizing a curve stays O(grid)."""
    if cache_key is not None:
        cached = _INTEGRAL_CACHE.get(cache_key)
        if cached is not None:
            return cached.copy()

    s = np.asarray(s_values, dtype=float)
    if s.size > 1 and np.any(np.diff(s) < 0):
        raise ValueError("integral evaluation points must be ascending")
    integrand, lower = node.children
    a = _eval_scalar(lower, {}, quad_tol)

    def f(u):
        return _eval_vector(integrand, np.asarray(u, dtype=float), None, quad_tol)

    head = adaptive_simpson(lambda u: _eval_scalar(integrand, {"u": u}, quad_tol),
                            a, float(s[0]), abs_tol=quad_tol)

    span = max(float(s[-1] - s[0]), 1e-300)
    left, right = s[:-1], s[1:]
    panel_tol = max(quad_tol * np.max(right - left) / span, 1e-15) if left.size else 0.0
    estimates = None
    pieces = np.zeros(0)
    for level in range(1, 11):
        if left.size == 0:
            break
        m = 2 ** level  # subintervals per panel, Simpson needs even
        offsets = np.linspace(0.0, 1.0, m + 1)
        pts = left[:, None] + (right - left)[:, None] * offsets[None, :]
        vals = f(pts.ravel()).reshape(pts.shape)
        w = np.ones(m + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        pieces = (right - left) / (3.0 * m) * (vals @ w)
        if estimates is not None and np.max(np.abs(pieces - estimates)) <= 15.0 * panel_tol:
            break
        estimates = pieces

    out = np.empty(s.size)
    out[0] = head
    np.cumsum(pieces, out=out[1:])
    out[1:] += head
    if cache_key is not None:
        _INTEGRAL_CACHE[cache_key] = out
        return out.copy()
    return out


def evaluate_on_grid(expr, grid, quad_tol=1e-10):
    """Evaluate the expression at every node of a SampleGrid (vectorized)."""
    if not isinstance(grid, SampleGrid):
        grid = SampleGrid.from_values(grid)
    values = _eval_vector(expr, grid.values, grid, quad_tol)
    return np.asarray(values, dtype=float)


def evaluate_sorted(expr, s_values, quad_tol=1e-10):
    """Evaluate at an ascending array of parameter values (no uniformity
    requirement); integral nodes are accumulated incrementally."""
    s = np.asarray(s_values, dtype=float)
    values = _eval_vector(expr, s, None, quad_tol)
    return np.broadcast_to(np.asarray(values, dtype=float), s.shape).copy()


# ---------------------------------------------------------------------------
# pretty printing
# ---------------------------------------------------------------------------

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}
_NEG_PREC = 4  # unary minus is part of 'base', tighter than any binary


def _fmt_number(x):
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _render(node, parent_prec, is_right):
    kind = node.kind
    if kind == "const":
        return _fmt_number(node.value)
    if kind == "var":
        return node.name
    if kind == "neg":
        # the grammar's base allows '-' in every operand position, so a neg
        # node itself never needs parentheses; a binary operand does
        return f"-{_render(node.children[0], _NEG_PREC, False)}"
    if kind == "call":
        return f"{node.name}({_render(node.children[0], 0, False)})"
    if kind == "integral":
        integrand = _render(node.children[0], 0, False)
        lower = _render(node.children[1], 0, False)
        return f"integral({integrand}, {lower}, s)"
    if kind == "binary":
        prec = _PRECEDENCE[node.name]
        left = _render(node.children[0], prec, False)
        right = _render(node.children[1], prec, True)
        text = f"{left}^{right}" if node.name == "^" else f"{left} {node.name} {right}"
        if parent_prec == 0:
            return text
        if prec < parent_prec:
            return f"({text})"
        if prec == parent_prec:
            # '^' is right-associative, '+ - * /' left-associative; wrap the
            # side a bare reparse would steal
            needs = (not is_right) if parent_prec == 3 else is_right
            if needs:
                return f"({text})"
        return text
    raise AssertionError(f"unknown node kind {kind!r}")


def to_text(expr):
    """Render the tree back to source; reparsing yields an identical tree."""
    return _render(expr, 0, False)
