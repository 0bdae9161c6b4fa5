"""Scalar expressions of the time variable ``t``.

Grammar (lowest to highest binding)::

    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := '-' unary | '+' unary | power
    power   := atom ('^' exponent)*          # left-associative
    exponent:= '-' exponent | '+' exponent | atom
    atom    := number | 't' | func '(' sum ')' | '(' sum ')'

Every binary operator, ``^`` included, associates to the left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "abs")

_MAX_NESTING = 100
_MAX_DEPTH = 600  # tree depth; evaluation and printing recurse


class ExprError(Exception):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.message = message
        self.offset = offset


class UnknownIdentifierError(ExprSyntaxError):
    pass


class ExprDomainError(ExprError, ArithmeticError):
    def __init__(self, message: str, t: float | None = None):
        where = "" if t is None else f" (t = {float(t)!r})"
        super().__init__(message + where)
        self.message = message
        self.t = t


# AST nodes

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    arg: "Node"


Node = Union[Num, Var, Neg, BinOp, Call]


# tokenizer

@dataclass(frozen=True)
class _Tok:
    kind: str  # num, ident, op, end
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
        elif c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == ".":
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    while k < n and text[k].isdigit():
                        k += 1
                    j = k
            toks.append(_Tok("num", text[i:j], i))
            i = j
        elif c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Tok("ident", text[i:j], i))
            i = j
        elif c in "+-*/^()":
            toks.append(_Tok("op", c, i))
            i += 1
        else:
            raise ExprSyntaxError(f"unexpected character {c!r}", i)
    toks.append(_Tok("end", "", n))
    return toks


def _depth(root: Node) -> int:
    best, stack = 0, [(root, 1)]
    while stack:
        node, d = stack.pop()
        best = max(best, d)
        if isinstance(node, BinOp):
            stack += [(node.left, d + 1), (node.right, d + 1)]
        elif isinstance(node, (Neg, Call)):
            stack.append((node.arg, d + 1))
    return best


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.depth = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> None:
        tok = self.take()
        if tok.text != text:
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", tok.pos)

    def nest(self, pos: int) -> None:
        self.depth += 1
        if self.depth > _MAX_NESTING:
            raise ExprSyntaxError("expression nested too deeply", pos)

    def parse(self) -> Node:
        node = self.sum()
        tok = self.peek()
        if tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {tok.text!r}", tok.pos)
        if _depth(node) > _MAX_DEPTH:
            raise ExprSyntaxError("expression too deep", 0)
        return node

    def sum(self) -> Node:
        node = self.product()
        while self.peek().text in ("+", "-") and self.peek().kind == "op":
            op = self.take().text
            node = BinOp(op, node, self.product())
        return node

    def product(self) -> Node:
        node = self.unary()
        while self.peek().text in ("*", "/") and self.peek().kind == "op":
            op = self.take().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        tok = self.peek()
        if tok.kind == "op" and tok.text in ("-", "+"):
            self.take()
            self.nest(tok.pos)
            arg = self.unary()
            self.depth -= 1
            return Neg(arg) if tok.text == "-" else arg
        return self.power()

    def power(self) -> Node:
        node = self.atom()
        while self.peek().kind == "op" and self.peek().text == "^":
            self.take()
            node = BinOp("^", node, self.exponent())
        return node

    def exponent(self) -> Node:
        tok = self.peek()
        if tok.kind == "op" and tok.text in ("-", "+"):
            self.take()
            self.nest(tok.pos)
            arg = self.exponent()
            self.depth -= 1
            return Neg(arg) if tok.text == "-" else arg
        return self.atom()

    def atom(self) -> Node:
        tok = self.take()
        if tok.kind == "num":
            try:
                value = float(tok.text)
            except ValueError:
                raise ExprSyntaxError(f"malformed number {tok.text!r}", tok.pos) from None
            if not math.isfinite(value):
                raise ExprSyntaxError(f"number out of range {tok.text!r}", tok.pos)
            return Num(value)
        if tok.kind == "ident":
            if tok.text == "t":
                return Var()
            if tok.text in FUNCTIONS:
                self.expect("(")
                self.nest(tok.pos)
                arg = self.sum()
                self.depth -= 1
                self.expect(")")
                return Call(tok.text, arg)
            raise UnknownIdentifierError(f"unknown identifier {tok.text!r}", tok.pos)
        if tok.kind == "op" and tok.text == "(":
            self.nest(tok.pos)
            node = self.sum()
            self.depth -= 1
            self.expect(")")
            return node
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExprSyntaxError(f"expected a value, found {found}", tok.pos)


# evaluation

def _div(a: float, b: float) -> float:
    if b == 0.0:
        raise ExprDomainError("division by zero")
    return a / b


def _pow(a: float, b: float) -> float:
    if a == 0.0 and b < 0.0:
        raise ExprDomainError("zero raised to a negative power")
    if a < 0.0 and b != math.floor(b):
        raise ExprDomainError("negative base with non-integer exponent")
    try:
        return math.pow(a, b)
    except OverflowError:
        raise ExprDomainError("overflow in power") from None


def _sqrt(x: float) -> float:
    if x < 0.0:
        raise ExprDomainError("sqrt of a negative number")
    return math.sqrt(x)


def _log(x: float) -> float:
    if x <= 0.0:
        raise ExprDomainError("log of a non-positive number")
    return math.log(x)


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        raise ExprDomainError("overflow in exp") from None


_FUNCS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": _exp,
    "log": _log,
    "sqrt": _sqrt,
    "abs": abs,
}


def _compile(node: Node) -> Callable[[float], float]:
    """Turn an AST into nested closures; much faster than re-walking the tree."""
    if isinstance(node, Num):
        v = node.value
        return lambda t: v
    if isinstance(node, Var):
        return lambda t: t
    if isinstance(node, Neg):
        f = _compile(node.arg)
        return lambda t: -f(t)
    if isinstance(node, Call):
        f, g = _FUNCS[node.name], _compile(node.arg)
        return lambda t: f(g(t))
    l, r = _compile(node.left), _compile(node.right)
    if node.op == "+":
        return lambda t: l(t) + r(t)
    if node.op == "-":
        return lambda t: l(t) - r(t)
    if node.op == "*":
        return lambda t: l(t) * r(t)
    if node.op == "/":
        return lambda t: _div(l(t), r(t))
    return lambda t: _pow(l(t), r(t))


# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_NEG_PREC = 3
_ATOM_PREC = 5


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _NEG_PREC
    return _ATOM_PREC


def _fmt_num(v: float) -> str:
    s = repr(v)
    if s.endswith(".0"):
        s = s[:-2]
    return f"({s})" if v < 0 or s.startswith("-") else s


def _to_text(node: Node) -> str:
    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Var):
        return "t"
    if isinstance(node, Call):
        return f"{node.name}({_to_text(node.arg)})"
    if isinstance(node, Neg):
        inner = _to_text(node.arg)
        if _prec(node.arg) < _NEG_PREC:
            inner = f"({inner})"
        return "-" + inner
    p = _PREC[node.op]
    left, right = _to_text(node.left), _to_text(node.right)
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    if node.op in "+-":
        return f"{left} {node.op} {right}"
    return f"{left}{node.op}{right}"


def _reflect(node: Node) -> Node:
    if isinstance(node, Var):
        return Neg(Var())
    if isinstance(node, Num):
        return node
    if isinstance(node, Neg):
        return Neg(_reflect(node.arg))
    if isinstance(node, Call):
        return Call(node.name, _reflect(node.arg))
    return BinOp(node.op, _reflect(node.left), _reflect(node.right))


class TimeExpr:
    """An immutable expression in ``t``. Call it to evaluate."""

    __slots__ = ("root", "_fn")

    def __init__(self, root: Node):
        self.root = root
        self._fn = None

    def __call__(self, t: float) -> float:
        fn = self._fn
        if fn is None:
            fn = self._fn = _compile(self.root)
        try:
            value = fn(float(t))
        except ExprDomainError as err:
            raise ExprDomainError(err.message, t) from None
        except (OverflowError, ValueError) as err:
            raise ExprDomainError(str(err), t) from None
        if not math.isfinite(value):
            raise ExprDomainError("non-finite value", t)
        return value

    def __getstate__(self):
        return self.root

    def __setstate__(self, root):
        self.root = root
        self._fn = None

    def __str__(self) -> str:
        return _to_text(self.root)

    def __repr__(self) -> str:
        return f"TimeExpr({str(self)!r})"

    @property
    def is_constant(self) -> bool:
        return isinstance(self.root, Num)

    def reflect(self) -> "TimeExpr":
        """Substitute t -> -t."""
        return TimeExpr(_reflect(self.root))

    # composition with literal folding, so that e.g. A - 0*C stays A

    def __neg__(self) -> "TimeExpr":
        if isinstance(self.root, Num):
            return TimeExpr(Num(-self.root.value + 0.0))
        if isinstance(self.root, Neg):
            return TimeExpr(self.root.arg)
        return TimeExpr(Neg(self.root))

    def __add__(self, other: "TimeExpr") -> "TimeExpr":
        a, b = self.root, _as_node(other)
        if _is_num(b, 0.0):
            return self
        if _is_num(a, 0.0):
            return TimeExpr(b)
        return _fold("+", a, b)

    def __sub__(self, other: "TimeExpr") -> "TimeExpr":
        a, b = self.root, _as_node(other)
        if _is_num(b, 0.0):
            return self
        if _is_num(a, 0.0):
            return -TimeExpr(b)
        return _fold("-", a, b)

    def __mul__(self, other: "TimeExpr") -> "TimeExpr":
        a, b = self.root, _as_node(other)
        if _is_num(a, 0.0) or _is_num(b, 0.0):
            return TimeExpr(Num(0.0))
        if _is_num(a, 1.0):
            return TimeExpr(b)
        if _is_num(b, 1.0):
            return self
        return _fold("*", a, b)


def _as_node(x) -> Node:
    if isinstance(x, TimeExpr):
        return x.root
    return Num(float(x))


def _is_num(node: Node, value: float) -> bool:
    return isinstance(node, Num) and node.value == value


def _fold(op: str, a: Node, b: Node) -> TimeExpr:
    if isinstance(a, Num) and isinstance(b, Num):
        v = {"+": a.value + b.value, "-": a.value - b.value, "*": a.value * b.value}[op]
        if math.isfinite(v):
            return TimeExpr(Num(v))
    return TimeExpr(BinOp(op, a, b))


def parse_expr(text: str) -> TimeExpr:
    if not isinstance(text, str):
        raise TypeError("expression must be a string")
    try:
        text.encode("ascii")
    except UnicodeEncodeError as err:
        raise ExprSyntaxError("non-ASCII character", err.start) from None
    if not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return TimeExpr(_Parser(text).parse())


def eval_expr(e: TimeExpr, t: float) -> float:
    return e(t)


def const(value: float) -> TimeExpr:
    return TimeExpr(Num(float(value)))
