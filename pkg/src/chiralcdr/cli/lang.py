"""Expression mini-language: tokenizer, parser and lowering to field expressions.

Grammar (informal)::

    query   := sum | sum 'o(' INT ')' sum | sum '_(' INT ')' sum
    sum     := ['-'] prod (('+' | '-') prod)*
    prod    := unary ('*' unary)*
    unary   := '-' unary | power
    power   := primary ['^' INT]
    primary := INT ['/' INT] | 'i' | '(' query ')' | ':' power+ ':'
             | 'd^' INT primary | '[' sum 'lam' sum ']'
             | 'exp(i*' INT '*' NAME ')' | NAME ['[' INT [',' INT] ']']

Normal-ordered groups nest to the right, so ``:a b c:`` is ``:a :b c::``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Mapping, Optional, Tuple, Union

from ..coeffring import CoeffFn, Scalar
from ..voa import FieldExpr, LambdaPoly, VAContext, circle, derivative, lambda_bracket, mode, wick


class ParseError(ValueError):
    def __init__(self, message: str, pos: int = -1):
        self.pos = pos
        super().__init__(f"{message} at position {pos}" if pos >= 0 else message)


# ----------------------------------------------------------------------
# tokens

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<name>[A-Za-z][A-Za-z0-9]*(?:_[A-Za-z0-9]+)*)|(?P<sym>[:+\-*/^()\[\],_]))"
)


@dataclass(frozen=True)
class Token:
    kind: str  # num, name, sym, end
    text: str
    pos: int


def tokenize(text: str) -> List[Token]:
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        out.append(Token(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(Token("end", "", len(text)))
    return out


# ----------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: Scalar


@dataclass(frozen=True)
class Ref:
    """Generator, coordinate or other named atom; indices as written."""

    name: str
    indices: Tuple[int, ...]
    pos: int


@dataclass(frozen=True)
class Fourier:
    k: int
    coord: str
    pos: int


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class Sum:
    left: "Node"
    right: "Node"
    sign: int


@dataclass(frozen=True)
class Mul:
    left: "Node"
    right: "Node"
    pos: int


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exp: int
    pos: int


@dataclass(frozen=True)
class Deriv:
    order: int
    arg: "Node"


@dataclass(frozen=True)
class NormalOrder:
    items: Tuple["Node", ...]


@dataclass(frozen=True)
class Bracket:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Circle:
    left: "Node"
    n: int
    right: "Node"
    modes: bool  # True for a_(n) b, False for a o(n) b


Node = Union[Num, Ref, Fourier, Neg, Sum, Mul, Pow, Deriv, NormalOrder, Bracket, Circle]


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def eat(self, kind: str, text: Optional[str] = None) -> Token:
        t = self.tok
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            got = t.text or "end of input"
            raise ParseError(f"expected {want!r}, got {got!r}", t.pos)
        self.i += 1
        return t

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def integer(self) -> int:
        neg = False
        if self.at("sym", "-"):
            self.i += 1
            neg = True
        v = int(self.eat("num").text)
        return -v if neg else v

    # grammar ----------------------------------------------------------
    def query(self) -> Node:
        left = self.sum()
        if self.at("name", "o") and self.peek().text == "(":
            self.i += 2
            n = self.integer()
            self.eat("sym", ")")
            return Circle(left, n, self.sum(), False)
        if self.at("sym", "_") and self.peek().text == "(":
            self.i += 2
            n = self.integer()
            self.eat("sym", ")")
            return Circle(left, n, self.sum(), True)
        return left

    def sum(self) -> Node:
        if self.at("sym", "-"):
            self.i += 1
            node: Node = Neg(self.prod())
        else:
            node = self.prod()
        while self.at("sym", "+") or self.at("sym", "-"):
            sign = 1 if self.tok.text == "+" else -1
            self.i += 1
            node = Sum(node, self.prod(), sign)
        return node

    def prod(self) -> Node:
        node = self.unary()
        while self.at("sym", "*"):
            pos = self.tok.pos
            self.i += 1
            node = Mul(node, self.unary(), pos)
        return node

    def unary(self) -> Node:
        if self.at("sym", "-"):
            self.i += 1
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        node = self.primary()
        if self.at("sym", "^"):
            pos = self.tok.pos
            self.i += 1
            node = Pow(node, int(self.eat("num").text), pos)
        return node

    def primary(self) -> Node:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            v = Fraction(int(t.text))
            if self.at("sym", "/") and self.peek().kind == "num":
                self.i += 1
                v = v / int(self.eat("num").text)
            return Num(Scalar(v))
        if t.kind == "sym" and t.text == "(":
            self.i += 1
            node = self.query()
            self.eat("sym", ")")
            return node
        if t.kind == "sym" and t.text == ":":
            return self.normal_order()
        if t.kind == "sym" and t.text == "[":
            self.i += 1
            a = self.sum()
            self.eat("name", "lam")
            b = self.sum()
            self.eat("sym", "]")
            return Bracket(a, b)
        if t.kind == "name":
            if t.text == "d" and self.peek().text == "^":
                self.i += 2
                k = int(self.eat("num").text)
                return Deriv(k, self.primary())
            if t.text == "exp" and self.peek().text == "(":
                self.i += 2
                self.eat("name", "i")
                self.eat("sym", "*")
                k = self.integer()
                self.eat("sym", "*")
                coord = self.eat("name").text
                self.eat("sym", ")")
                return Fourier(k, coord, t.pos)
            if t.text == "i" and self.peek().text != "[":
                self.i += 1
                return Num(Scalar(0, 1))
            self.i += 1
            idx: Tuple[int, ...] = ()
            if self.at("sym", "["):
                self.i += 1
                vals = [int(self.eat("num").text)]
                while self.at("sym", ","):
                    self.i += 1
                    vals.append(int(self.eat("num").text))
                self.eat("sym", "]")
                idx = tuple(vals)
            return Ref(t.text, idx, t.pos)
        raise ParseError(f"unexpected {t.text or 'end of input'!r}", t.pos)

    def normal_order(self) -> Node:
        start = self.eat("sym", ":")
        items = []
        while not self.at("sym", ":"):
            if self.at("end"):
                raise ParseError("unbalanced normal-order delimiter ':'", start.pos)
            items.append(self.power())
        self.eat("sym", ":")
        if not items:
            raise ParseError("empty normal-ordered group", start.pos)
        return NormalOrder(tuple(items))


def parse_expr(text: str) -> Node:
    p = _Parser(text)
    node = p.query()
    if not p.at("end"):
        raise ParseError(f"unexpected {p.tok.text!r}", p.tok.pos)
    return node


# ----------------------------------------------------------------------
# lowering


class LoweringError(ValueError):
    pass


def _is_function(e: FieldExpr) -> bool:
    return set(e.terms) <= {()}


def _resolve(ctx: VAContext, ref: Ref) -> FieldExpr:
    name, idx = ref.name, ref.indices
    coords = ctx.coords
    if name == "dgamma" and len(idx) == 2:
        if idx[1] < 1:
            raise LoweringError(f"dgamma needs a positive derivative order (position {ref.pos})")
        return FieldExpr.gen(ctx, f"dgamma[{idx[0]}]", idx[1] - 1)
    if len(idx) == 1:
        full = f"{name}[{idx[0]}]"
        if ctx.has(full):
            return FieldExpr.gen(ctx, full)
        if name == "gamma" and f"gamma{idx[0]}" in coords.flat:
            return FieldExpr.function(ctx, CoeffFn.coordinate(coords, f"gamma{idx[0]}"))
        raise LoweringError(f"unknown generator {full!r} (position {ref.pos})")
    if idx:
        raise LoweringError(f"malformed reference {name}{list(idx)} (position {ref.pos})")
    if ctx.has(name):
        return FieldExpr.gen(ctx, name)
    if name in coords.flat:
        return FieldExpr.function(ctx, CoeffFn.coordinate(coords, name))
    raise LoweringError(f"unknown generator {name!r} (position {ref.pos})")


def lower(node: Node, ctx: VAContext, env: Optional[Mapping[str, FieldExpr]] = None) -> Union[FieldExpr, LambdaPoly]:
    """Evaluate an AST to a canonical FieldExpr (or LambdaPoly for bracket queries).

    ``env`` supplies named fields such as J, Q, G, L.
    """
    if isinstance(node, Bracket):
        return lambda_bracket(_field(node.left, ctx, env), _field(node.right, ctx, env))
    if isinstance(node, Circle):
        a, b = _field(node.left, ctx, env), _field(node.right, ctx, env)
        return mode(a, node.n, b) if node.modes else circle(a, node.n, b)
    return _field(node, ctx, env)


def _field(node: Node, ctx: VAContext, env: Optional[Mapping[str, FieldExpr]] = None) -> FieldExpr:
    if isinstance(node, Num):
        return FieldExpr.scalar(ctx, node.value)
    if isinstance(node, Ref):
        if env and not node.indices and node.name in env:
            return env[node.name]
        return _resolve(ctx, node)
    if isinstance(node, Fourier):
        try:
            return FieldExpr.function(ctx, CoeffFn.fourier(ctx.coords, node.coord, node.k))
        except ValueError as exc:
            raise LoweringError(f"{exc} (position {node.pos})") from None
    if isinstance(node, Neg):
        return -_field(node.arg, ctx, env)
    if isinstance(node, Sum):
        a, b = _field(node.left, ctx, env), _field(node.right, ctx, env)
        return a + b if node.sign > 0 else a - b
    if isinstance(node, Mul):
        a, b = _field(node.left, ctx, env), _field(node.right, ctx, env)
        if _is_function(a):
            return wick(a, b)
        if _is_function(b) and (not b.terms or b.terms[()].is_constant()):
            return a * b.terms[()].constant_term() if b.terms else FieldExpr.zero(ctx)
        raise LoweringError(f"'*' needs a function or scalar on the left (position {node.pos}); use :a b: for fields")
    if isinstance(node, Pow):
        base = _field(node.base, ctx, env)
        if not _is_function(base):
            raise LoweringError(f"only functions can be raised to powers (position {node.pos})")
        f = base.terms.get((), ctx.zero_fn)
        return FieldExpr.function(ctx, f ** node.exp)
    if isinstance(node, Deriv):
        return derivative(_field(node.arg, ctx, env), node.order)
    if isinstance(node, NormalOrder):
        acc = _field(node.items[-1], ctx, env)
        for item in reversed(node.items[:-1]):
            acc = wick(_field(item, ctx, env), acc)
        return acc
    if isinstance(node, (Bracket, Circle)):
        raise LoweringError("bracket and circle queries are only allowed at the top level")
    raise LoweringError(f"cannot lower {node!r}")


def evaluate(text: str, ctx: VAContext, env: Optional[Mapping[str, FieldExpr]] = None) -> Union[FieldExpr, LambdaPoly]:
    return lower(parse_expr(text), ctx, env)
