"""Closed-form coefficient expressions: parsing and node-wise evaluation.

Grammar: decimal literals, variables x and y, constants pi and e, binary
+ - * / ^, unary minus, and the calls sin cos exp log sqrt abs tanh.
Precedence, tightest first:

    ^  (right associative)
    unary -
    *  /   (left)
    +  -   (left)

so "-x^2" is -(x^2) while "2^-3" still parses (the exponent starts a fresh
prefix expression).  Every syntax error carries the byte offset it was
detected at.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, ScalarField


class ExprError(Exception):
    """Parse error with the byte offset where it was detected."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class EmptyInput(ExprError):
    pass


class UnbalancedParen(ExprError):
    pass


class UnknownIdentifier(ExprError):
    pass


class UnexpectedToken(ExprError):
    pass


class DomainError(Exception):
    """Evaluation left the real domain (log/sqrt of a negative, division by zero)."""


# --- syntax tree ----------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # "x", "y", "pi" or "e"


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"


Expr = Num | Var | Neg | BinOp | Call

FUNCTIONS = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "abs": abs,
    "tanh": math.tanh,
}
CONSTANTS = {"pi": math.pi, "e": math.e}
VARIABLES = ("x", "y")

_ADD_BP = 10
_MUL_BP = 20
_NEG_BP = 30
_POW_BP = 40


def _tokenize(src: str):
    """Yield (kind, text, offset); kinds: num, ident, op, lparen, rparen, end."""
    i, n = 0, len(src)
    while i < n:
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            while j < n and (src[j].isdigit() or src[j] == "."):
                j += 1
            if j < n and src[j] in "eE" and (j + 1 < n and (src[j + 1].isdigit() or
                                                            (src[j + 1] in "+-" and j + 2 < n and src[j + 2].isdigit()))):
                j += 2 if src[j + 1] in "+-" else 1
                while j < n and src[j].isdigit():
                    j += 1
            text = src[i:j]
            try:
                float(text)
            except ValueError:
                raise UnexpectedToken(f"malformed number {text!r}", i) from None
            yield "num", text, i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            yield "ident", src[i:j], i
            i = j
            continue
        if ch in "+-*/^":
            yield "op", ch, i
            i += 1
            continue
        if ch == "(":
            yield "lparen", ch, i
            i += 1
            continue
        if ch == ")":
            yield "rparen", ch, i
            i += 1
            continue
        raise UnexpectedToken(f"unexpected character {ch!r}", i)
    yield "end", "", n


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = list(_tokenize(src))
        self.pos = 0

    @property
    def cur(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_rparen(self, open_offset: int):
        kind, _, off = self.cur
        if kind != "rparen":
            raise UnbalancedParen(f"missing ')' for '(' at offset {open_offset}", off)
        self.advance()

    def parse(self) -> Expr:
        kind, _, off = self.cur
        if kind == "end":
            raise EmptyInput("empty expression", off)
        tree = self.expression(0)
        kind, text, off = self.cur
        if kind == "rparen":
            raise UnbalancedParen("')' without matching '('", off)
        if kind != "end":
            raise UnexpectedToken(f"trailing input {text!r}", off)
        return tree

    def expression(self, min_bp: int) -> Expr:
        left = self.prefix()
        while True:
            kind, text, _ = self.cur
            if kind != "op":
                break
            lbp = _POW_BP if text == "^" else (_MUL_BP if text in "*/" else _ADD_BP)
            if lbp <= min_bp:
                break
            self.advance()
            # ^ recurses one level looser than itself, making it right-assoc
            right = self.expression(lbp - 1 if text == "^" else lbp)
            left = BinOp(text, left, right)
        return left

    def prefix(self) -> Expr:
        kind, text, off = self.advance()
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            if self.cur[0] == "lparen":
                if text not in FUNCTIONS:
                    raise UnknownIdentifier(f"unknown function {text!r}", off)
                open_off = self.cur[2]
                self.advance()
                arg = self.expression(0)
                self.expect_rparen(open_off)
                return Call(text, arg)
            if text in VARIABLES or text in CONSTANTS:
                return Var(text)
            raise UnknownIdentifier(f"unknown identifier {text!r}", off)
        if kind == "op" and text == "-":
            return Neg(self.expression(_NEG_BP))
        if kind == "lparen":
            inner = self.expression(0)
            self.expect_rparen(off)
            return inner
        if kind == "rparen":
            raise UnbalancedParen("')' without matching '('", off)
        if kind == "end":
            raise UnexpectedToken("unexpected end of input", off)
        raise UnexpectedToken(f"unexpected token {text!r}", off)


def parse(src: str) -> Expr:
    """Parse a coefficient expression; raises an ExprError subclass on bad input."""
    if not src.strip():
        raise EmptyInput("empty expression", 0)
    return _Parser(src).parse()


def eval_at(expr: Expr, x: float, y: float) -> float:
    """Evaluate at a point; DomainError when the value leaves the reals."""
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Var):
        if expr.name == "x":
            return x
        if expr.name == "y":
            return y
        return CONSTANTS[expr.name]
    if isinstance(expr, Neg):
        return -eval_at(expr.arg, x, y)
    if isinstance(expr, Call):
        v = eval_at(expr.arg, x, y)
        if expr.fn == "log" and v <= 0.0:
            raise DomainError(f"log of non-positive value {v:.6g}")
        if expr.fn == "sqrt" and v < 0.0:
            raise DomainError(f"sqrt of negative value {v:.6g}")
        try:
            return float(FUNCTIONS[expr.fn](v))
        except OverflowError:
            raise DomainError(f"{expr.fn} overflow at argument {v:.6g}") from None
    if isinstance(expr, BinOp):
        a = eval_at(expr.left, x, y)
        b = eval_at(expr.right, x, y)
        if expr.op == "+":
            return a + b
        if expr.op == "-":
            return a - b
        if expr.op == "*":
            return a * b
        if expr.op == "/":
            if b == 0.0:
                raise DomainError("division by zero")
            return a / b
        # power
        if a == 0.0 and b < 0.0:
            raise DomainError("zero raised to a negative power")
        try:
            r = a ** b
        except (OverflowError, ZeroDivisionError):
            raise DomainError(f"power overflow in {a:.6g}^{b:.6g}") from None
        if isinstance(r, complex) or not math.isfinite(r):
            raise DomainError(f"power {a:.6g}^{b:.6g} is not a finite real")
        return r
    raise TypeError(f"not an expression node: {expr!r}")


def eval_field(expr: Expr, grid: Grid) -> ScalarField:
    """Sample the expression at every interior node center."""
    X, Y = grid.node_coords()
    vals = np.empty(grid.n_nodes)
    xs, ys = X.reshape(-1), Y.reshape(-1)
    for k in range(grid.n_nodes):
        try:
            vals[k] = eval_at(expr, xs[k], ys[k])
        except DomainError as err:
            raise DomainError(f"{err} at node ({xs[k]:.17g}, {ys[k]:.17g})") from None
    return ScalarField(grid, vals)


def to_string(expr: Expr) -> str:
    """Pretty-print with minimal parentheses; reparses to an equal tree."""

    def prec(e: Expr) -> int:
        if isinstance(e, BinOp):
            return _POW_BP if e.op == "^" else (_MUL_BP if e.op in "*/" else _ADD_BP)
        if isinstance(e, Neg):
            return _NEG_BP
        return 100

    def render(e: Expr) -> str:
        if isinstance(e, Num):
            return f"{e.value:.17g}"
        if isinstance(e, Var):
            return e.name
        if isinstance(e, Neg):
            inner = render(e.arg)
            if prec(e.arg) < _NEG_BP:
                inner = f"({inner})"
            return f"-{inner}"
        if isinstance(e, Call):
            return f"{e.fn}({render(e.arg)})"
        lhs, rhs = render(e.left), render(e.right)
        p = prec(e)
        if prec(e.left) < p or (e.op == "^" and isinstance(e.left, BinOp) and e.left.op == "^") \
                or (e.op == "^" and isinstance(e.left, Neg)):
            lhs = f"({lhs})"
        # left-assoc ops reparse a same-precedence right child to the left,
        # so it must keep its parentheses
        right_needs = prec(e.right) < p or (
            e.op != "^" and isinstance(e.right, BinOp) and prec(e.right) == p)
        if e.op == "^" and isinstance(e.right, Neg):
            right_needs = False  # 2^-3 parses fine
        if right_needs:
            rhs = f"({rhs})"
        return f"{lhs}{e.op}{rhs}"

    return render(expr)
