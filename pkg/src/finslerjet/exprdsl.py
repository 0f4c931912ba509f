"""A small arithmetic expression language for metric coefficients.

Grammar (whitespace-insensitive)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' intexp)?
    intexp  := '-'? INT ('^' intexp)?
    atom    := NUMBER | VAR | FUNC '(' expr ')' | '(' expr ')'

Variables are ``x1 .. xn``; in one dimension ``x`` is accepted as well.
Exponents are integers only; ``x^2^3`` means ``x^(2^3)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import jets
from .errors import DimensionError, DomainError, DivisionByZeroJet, ParseError
from .jets import Jet

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt", "arctan")


@dataclass(frozen=True)
class Num:
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value) or self.value < 0:
            raise ValueError("literals are finite and non-negative; negate with Neg")


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Pow, Call]


# -- lexer ---------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    offset: int


def _lex(src: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", _byte_offset(src, pos))
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), _byte_offset(src, pos)))
        pos = m.end()
    toks.append(_Tok("end", "", _byte_offset(src, len(src))))
    return toks


def _byte_offset(src: str, pos: int) -> int:
    return len(src[:pos].encode("utf-8"))


# -- parser --------------------------------------------------------------------


class _Parser:
    def __init__(self, src: str, dim: int):
        self.toks = _lex(src)
        self.i = 0
        self.dim = dim

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text or self.tok.kind != "op":
            raise ParseError(f"expected {text!r}, found {self._describe()}", self.tok.offset)
        return self.take()

    def _describe(self) -> str:
        return "end of input" if self.tok.kind == "end" else repr(self.tok.text)

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self._describe()} after expression", self.tok.offset)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.take().text
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.take().text
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.take()
            return Pow(base, self.intexp())
        return base

    def intexp(self) -> int:
        sign = 1
        if self.tok.kind == "op" and self.tok.text == "-":
            self.take()
            sign = -1
        t = self.tok
        if t.kind != "num" or not t.text.isdigit():
            raise ParseError(f"exponent must be an integer literal, found {self._describe()}", t.offset)
        self.take()
        value = int(t.text)
        if self.tok.kind == "op" and self.tok.text == "^":
            self.take()
            inner_offset = self.tok.offset
            inner = self.intexp()
            if inner < 0 and abs(value) != 1:
                raise ParseError("exponent does not reduce to an integer", inner_offset)
            value = value**inner if inner >= 0 else int(value ** float(inner))
        return sign * value

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.take()
            return Num(float(t.text))
        if t.kind == "name":
            self.take()
            if t.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(t.text, arg)
            return Var(self._var_index(t))
        if t.kind == "op" and t.text == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"expected a number, variable, call or '(', found {self._describe()}", t.offset)

    def _var_index(self, t: _Tok) -> int:
        if t.text == "x":
            if self.dim != 1:
                raise DimensionError(f"bare 'x' is only allowed in one dimension (dim={self.dim})")
            return 1
        m = re.fullmatch(r"x([0-9]+)", t.text)
        if m is None:
            raise ParseError(f"unknown name {t.text!r}", t.offset)
        k = int(m.group(1))
        if not 1 <= k <= self.dim:
            raise DimensionError(f"variable {t.text} outside dimension {self.dim}")
        return k


def parse(src: str, dim: int) -> Expr:
    """Parse ``src`` into an expression tree over ``dim`` variables."""
    if dim < 1:
        raise DimensionError("dimension must be at least 1")
    return _Parser(src, dim).parse()


# -- printing ------------------------------------------------------------------


def to_string(e: Expr) -> str:
    """Render ``e`` so that ``parse(to_string(e))`` rebuilds the same tree."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Neg):
        return f"-{_wrapped(e.operand)}"
    if isinstance(e, BinOp):
        return f"{_wrapped(e.left)} {e.op} {_wrapped(e.right)}"
    if isinstance(e, Pow):
        return f"{_wrapped(e.base)}^{e.exponent}"
    if isinstance(e, Call):
        return f"{e.fn}({to_string(e.arg)})"
    raise TypeError(f"not an expression: {e!r}")


def _wrapped(e: Expr) -> str:
    s = to_string(e)
    return s if isinstance(e, (Num, Var, Call)) else f"({s})"


def max_variable(e: Expr) -> int:
    if isinstance(e, Var):
        return e.index
    if isinstance(e, Num):
        return 0
    if isinstance(e, (Neg,)):
        return max_variable(e.operand)
    if isinstance(e, BinOp):
        return max(max_variable(e.left), max_variable(e.right))
    if isinstance(e, Pow):
        return max_variable(e.base)
    return max_variable(e.arg)


def substitute(e: Expr, inner: Expr) -> Expr:
    """Replace the single variable of a one-dimensional expression by ``inner``."""
    if isinstance(e, Var):
        return inner
    if isinstance(e, Num):
        return e
    if isinstance(e, Neg):
        return Neg(substitute(e.operand, inner))
    if isinstance(e, BinOp):
        return BinOp(e.op, substitute(e.left, inner), substitute(e.right, inner))
    if isinstance(e, Pow):
        return Pow(substitute(e.base, inner), e.exponent)
    return Call(e.fn, substitute(e.arg, inner))


def const(value: float) -> Expr:
    """Literal for any finite float (negative values become ``Neg``)."""
    return Neg(Num(-value)) if value < 0 else Num(float(value))


# -- evaluation ----------------------------------------------------------------


def eval_jet(e: Expr, point: Sequence[Jet]) -> Jet:
    """Evaluate ``e`` with ``point[k-1]`` substituted for ``xk``."""
    ref = point[0]
    if max_variable(e) > len(point):
        raise DimensionError(f"expression uses x{max_variable(e)} but point has {len(point)} entries")

    def ev(node: Expr) -> Jet:
        if isinstance(node, Num):
            return Jet.constant(node.value, ref.nvars, ref.degree)
        if isinstance(node, Var):
            return point[node.index - 1]
        if isinstance(node, Neg):
            return -ev(node.operand)
        if isinstance(node, BinOp):
            a, b = ev(node.left), ev(node.right)
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            return a / b
        if isinstance(node, Pow):
            return jets.int_power(ev(node.base), node.exponent)
        return jets.ELEMENTARY[node.fn](ev(node.arg))

    return ev(e)


_FLOAT_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "arctan": np.arctan,
}


def _float_int_power(a: float, n: int) -> float:
    # same multiplication order as jets.int_power
    if n < 0:
        if abs(a) < jets.DIV_GUARD:
            raise DivisionByZeroJet("negative power of zero")
        return 1.0 / _float_int_power(a, -n)
    result = None
    base = a
    while n:
        if n & 1:
            result = base if result is None else result * base
        n >>= 1
        if n:
            base = base * base
    return 1.0 if result is None else result


def eval_float(e: Expr, values: Sequence[float]) -> float:
    """Plain floating-point evaluation (no derivatives)."""

    def ev(node: Expr) -> float:
        if isinstance(node, Num):
            return node.value
        if isinstance(node, Var):
            return float(values[node.index - 1])
        if isinstance(node, Neg):
            return -ev(node.operand)
        if isinstance(node, BinOp):
            a, b = ev(node.left), ev(node.right)
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            if abs(b) < jets.DIV_GUARD:
                raise DivisionByZeroJet("division by zero")
            return a / b
        if isinstance(node, Pow):
            return _float_int_power(ev(node.base), node.exponent)
        a = ev(node.arg)
        if node.fn == "sqrt":
            if a <= 0:
                raise DomainError("sqrt requires a positive argument")
            return float(np.sqrt(a))
        if node.fn == "ln":
            if a <= 0:
                raise DomainError("ln requires a positive argument")
            return float(np.log(a))
        return float(_FLOAT_FUNCS[node.fn](a))

    return ev(e)


# -- symbolic differentiation ----------------------------------------------------

_ZERO = Num(0.0)
_ONE = Num(1.0)


def _mul(a: Expr, b: Expr) -> Expr:
    if a == _ZERO or b == _ZERO:
        return _ZERO
    if a == _ONE:
        return b
    if b == _ONE:
        return a
    return BinOp("*", a, b)


def _add(a: Expr, b: Expr, op: str = "+") -> Expr:
    if b == _ZERO:
        return a
    if a == _ZERO:
        return b if op == "+" else Neg(b)
    return BinOp(op, a, b)


def diff(e: Expr, var: int) -> Expr:
    """Derivative of ``e`` in ``x{var}``; only the trivial 0/1 cases are folded."""
    if isinstance(e, Num):
        return _ZERO
    if isinstance(e, Var):
        return _ONE if e.index == var else _ZERO
    if isinstance(e, Neg):
        d = diff(e.operand, var)
        return _ZERO if d == _ZERO else Neg(d)
    if isinstance(e, BinOp):
        u, v = e.left, e.right
        du, dv = diff(u, var), diff(v, var)
        if e.op in "+-":
            return _add(du, dv, e.op)
        if e.op == "*":
            return _add(_mul(du, v), _mul(u, dv))
        # (u/v)' = u'/v - u v'/v^2
        first = _ZERO if du == _ZERO else BinOp("/", du, v)
        second = _ZERO if dv == _ZERO else BinOp("/", _mul(u, dv), Pow(v, 2))
        return _add(first, second, "-")
    if isinstance(e, Pow):
        du = diff(e.base, var)
        if du == _ZERO or e.exponent == 0:
            return _ZERO
        k = e.exponent
        lower = e.base if k == 2 else Pow(e.base, k - 1)
        return _mul(_mul(const(float(k)), lower), du)
    du = diff(e.arg, var)
    if du == _ZERO:
        return _ZERO
    u = e.arg
    if e.fn == "sin":
        outer = Call("cos", u)
    elif e.fn == "cos":
        outer = Neg(Call("sin", u))
    elif e.fn == "exp":
        outer = e
    elif e.fn == "ln":
        return BinOp("/", du, u)
    elif e.fn == "sqrt":
        return BinOp("/", du, BinOp("*", Num(2.0), e))
    else:  # arctan
        return BinOp("/", du, BinOp("+", _ONE, Pow(u, 2)))
    return _mul(outer, du)


def gradient(e: Expr, dim: int) -> tuple[Expr, ...]:
    return tuple(diff(e, k) for k in range(1, dim + 1))
