"""Tiny arithmetic expression language for time-varying coefficients and delays.

Grammar (fixed, no user-defined functions):

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := '-' factor | atom
    atom    := NUMBER | 't' | 'pi' | 'e'
             | NAME '(' expr (',' expr)* ')'
             | '(' expr ')'

Known functions: sin, cos, exp, abs (unary); min, max (binary).
Expressions evaluate over the single variable ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Expr",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "ParseError",
    "EvaluationError",
    "parse",
    "to_source",
    "evaluate",
    "evaluate_array",
    "compile_scalar",
    "is_constant_expr",
]

FUNCTIONS = {"sin": 1, "cos": 1, "exp": 1, "abs": 1, "min": 2, "max": 2}
CONSTANTS = {"pi": math.pi, "e": math.e}

_SCALAR_FUNCS = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "abs": abs,
    "min": min,
    "max": max,
}
_ARRAY_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "abs": np.abs,
    "min": np.minimum,
    "max": np.maximum,
}


class ParseError(ValueError):
    """Syntax error with position and expectation info."""

    def __init__(self, message, source, pos):
        self.source = source
        self.pos = pos
        super().__init__(f"{message} at position {pos}: {source!r}")


class EvaluationError(ValueError):
    """Expression failed to evaluate (division by zero, overflow, ...)."""


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass  # the only variable is t


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Expr = Num | Var | Neg | BinOp | Call


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

_PUNCT = set("+-*/(),")


def _tokenize(source):
    tokens = []  # (kind, text, pos)
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
            continue
        if c in _PUNCT:
            tokens.append(("punct", c, i))
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            seen_dot = False
            while j < n and (source[j].isdigit() or source[j] == "."):
                if source[j] == ".":
                    if seen_dot:
                        raise ParseError("malformed number", source, j)
                    seen_dot = True
                j += 1
            # exponent part: 1e-3, 2.5E+6
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    while k < n and source[k].isdigit():
                        k += 1
                    j = k
            text = source[i:j]
            try:
                float(text)
            except ValueError:
                raise ParseError("malformed number", source, i) from None
            tokens.append(("number", text, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(("name", source[i:j], i))
            i = j
            continue
        raise ParseError(f"unexpected character {c!r}", source, i)
    tokens.append(("eof", "", n))
    return tokens


class _Parser:
    def __init__(self, source):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, tok, pos = self.peek()
        if tok != text:
            raise ParseError(f"expected {text!r}, found {tok or 'end of input'!r}",
                             self.source, pos)
        return self.advance()

    def parse(self):
        node = self.expr()
        kind, tok, pos = self.peek()
        if kind != "eof":
            raise ParseError(f"unexpected trailing input {tok!r}", self.source, pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/"):
            op = self.advance()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        if self.peek()[1] == "-":
            self.advance()
            return Neg(self.factor())
        return self.atom()

    def atom(self):
        kind, text, pos = self.peek()
        if kind == "number":
            self.advance()
            return Num(float(text))
        if text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if kind == "name":
            self.advance()
            if text == "t":
                return Var()
            if text in CONSTANTS:
                return Num(CONSTANTS[text])
            if text in FUNCTIONS:
                self.expect("(")
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[text]:
                    raise ParseError(
                        f"{text} takes {FUNCTIONS[text]} argument(s), got {len(args)}",
                        self.source, pos)
                return Call(text, tuple(args))
            raise ParseError(f"unknown identifier {text!r}", self.source, pos)
        raise ParseError(
            f"expected number, 't', constant, function or '(', found {text or 'end of input'!r}",
            self.source, pos)


def parse(source):
    """Parse an expression in ``t`` into an AST."""
    if not isinstance(source, str):
        raise TypeError(f"expected str, got {type(source).__name__}")
    return _Parser(source).parse()


def is_constant_expr(node):
    """True when the AST contains no occurrence of ``t``."""
    if isinstance(node, Var):
        return False
    if isinstance(node, Num):
        return True
    if isinstance(node, Neg):
        return is_constant_expr(node.arg)
    if isinstance(node, BinOp):
        return is_constant_expr(node.left) and is_constant_expr(node.right)
    if isinstance(node, Call):
        return all(is_constant_expr(a) for a in node.args)
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# Printing (minimal parentheses; parse(to_source(e)) == e)
# ---------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _fmt(node, parent_prec, is_right):
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return "t"
    if isinstance(node, Neg):
        inner = _fmt(node.arg, 3, False)
        s = f"-{inner}"
        return f"({s})" if parent_prec > 1 or (parent_prec == 1 and is_right) else s
    if isinstance(node, Call):
        args = ", ".join(_fmt(a, 0, False) for a in node.args)
        return f"{node.name}({args})"
    if isinstance(node, BinOp):
        prec = _PREC[node.op]
        left = _fmt(node.left, prec, False)
        # - and / are left-associative: right operand needs a higher level
        right = _fmt(node.right, prec + (0 if node.op in "+*" else 1),
                     node.op in "+*")
        s = f"{left} {node.op} {right}"
        if prec < parent_prec or (prec == parent_prec and is_right):
            return f"({s})"
        return s
    raise TypeError(f"not an expression node: {node!r}")


def to_source(node):
    """Render an AST back to parseable source."""
    return _fmt(node, 0, False)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def compile_scalar(node):
    """Build a fast closure ``t -> float`` for repeated scalar evaluation."""
    if isinstance(node, Num):
        v = node.value
        return lambda t: v
    if isinstance(node, Var):
        return lambda t: t
    if isinstance(node, Neg):
        f = compile_scalar(node.arg)
        return lambda t: -f(t)
    if isinstance(node, BinOp):
        fl_, fr = compile_scalar(node.left), compile_scalar(node.right)
        op = node.op
        if op == "+":
            return lambda t: fl_(t) + fr(t)
        if op == "-":
            return lambda t: fl_(t) - fr(t)
        if op == "*":
            return lambda t: fl_(t) * fr(t)

        def div(t):
            d = fr(t)
            if d == 0.0:
                raise EvaluationError(f"division by zero at t={t}")
            return fl_(t) / d

        return div
    if isinstance(node, Call):
        fn = _SCALAR_FUNCS[node.name]
        fargs = [compile_scalar(a) for a in node.args]
        if len(fargs) == 1:
            fa = fargs[0]

            def call1(t):
                try:
                    return fn(fa(t))
                except (OverflowError, ValueError) as exc:
                    raise EvaluationError(f"{node.name} failed at t={t}: {exc}") from exc

            return call1
        fa, fb = fargs
        return lambda t: fn(fa(t), fb(t))
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node, t):
    """Evaluate the AST at a single time ``t``."""
    try:
        return compile_scalar(node)(t)
    except (ZeroDivisionError, OverflowError) as exc:
        raise EvaluationError(f"evaluation failed at t={t}: {exc}") from exc


def evaluate_array(node, ts):
    """Vectorized evaluation on a numpy array of times."""
    ts = np.asarray(ts, dtype=float)

    def rec(n):
        if isinstance(n, Num):
            return n.value
        if isinstance(n, Var):
            return ts
        if isinstance(n, Neg):
            return -rec(n.arg)
        if isinstance(n, BinOp):
            left, right = rec(n.left), rec(n.right)
            if n.op == "+":
                return left + right
            if n.op == "-":
                return left - right
            if n.op == "*":
                return left * right
            return left / right
        if isinstance(n, Call):
            fn = _ARRAY_FUNCS[n.name]
            return fn(*[rec(a) for a in n.args])
        raise TypeError(f"not an expression node: {n!r}")

    with np.errstate(divide="raise", invalid="raise", over="raise"):
        try:
            out = rec(node)
        except FloatingPointError as exc:
            raise EvaluationError(f"evaluation failed on grid: {exc}") from exc
    return np.broadcast_to(np.asarray(out, dtype=float), ts.shape).copy()
