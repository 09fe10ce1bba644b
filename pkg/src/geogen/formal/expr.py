"""Algebraic expressions over measure symbols, and canonical equations.

Grammar (standard precedence, ``^`` binds tightest, left-associative
otherwise)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" INT)?
    atom   := NUMBER | "sqrt(" expr ")" | NAME "(" args ")" | NAME | "(" expr ")"

``NAME(args)`` is a measure symbol when ``NAME`` is one of
:data:`MEASURE_KINDS` (``LengthOfLine(AB)``); any other call is an opaque
helper symbol (``x(A)``, ``dist2(A,B)``) used by coordinate constraint
templates.  Bare lowercase names are free variables.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping

from geogen.errors import GeoSyntaxError, NonPolynomial, NotExact
from geogen.formal.entities import make_entity, split_pattern
from geogen.formal.numbers import Radical

MEASURE_KINDS = {
    "LengthOfLine": "segment",
    "MeasureOfAngle": "angle",
    "AreaOfPolygon": "polygon",
    "PerimeterOfPolygon": "polygon",
}


@dataclass(frozen=True)
class Symbol:
    kind: str
    args: tuple[str, ...]

    @property
    def text(self) -> str:
        if self.kind == "var":
            return self.args[0]
        if self.kind in MEASURE_KINDS:
            return f"{self.kind}({''.join(self.args)})"
        return f"{self.kind}({','.join(self.args)})"

    @property
    def is_measure(self) -> bool:
        return self.kind in MEASURE_KINDS

    @property
    def is_pattern(self) -> bool:
        return any(a.startswith("?") for a in self.args)

    def __str__(self) -> str:
        return self.text

    def __lt__(self, other: "Symbol") -> bool:
        return self.text < other.text


def measure(kind: str, points) -> Symbol:
    """Canonical measure symbol; polygons are normalised up to reflection."""
    slot = MEASURE_KINDS[kind]
    ent = make_entity(slot, tuple(points), dihedral=True)
    return Symbol(kind, ent.points)


def var(name: str) -> Symbol:
    return Symbol("var", (name,))


# -- expression tree ---------------------------------------------------------

class Expr:
    prec = 5

    def __add__(self, o): return BinOp("+", self, _wrap(o))
    def __radd__(self, o): return BinOp("+", _wrap(o), self)
    def __sub__(self, o): return BinOp("-", self, _wrap(o))
    def __rsub__(self, o): return BinOp("-", _wrap(o), self)
    def __mul__(self, o): return BinOp("*", self, _wrap(o))
    def __rmul__(self, o): return BinOp("*", _wrap(o), self)
    def __truediv__(self, o): return BinOp("/", self, _wrap(o))
    def __neg__(self): return Neg(self)

    @property
    def text(self) -> str:
        return format_expr(self)

    def __str__(self) -> str:
        return self.text


def _wrap(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, Symbol):
        return Sym(v)
    return Const(Fraction(v))


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: Fraction
    prec = 5


@dataclass(frozen=True, eq=True)
class Sym(Expr):
    symbol: Symbol
    prec = 5


@dataclass(frozen=True, eq=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    @property
    def prec(self) -> int:  # type: ignore[override]
        return 1 if self.op in "+-" else 2


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    operand: Expr
    prec = 3


@dataclass(frozen=True, eq=True)
class Pow(Expr):
    base: Expr
    exp: int
    prec = 4


@dataclass(frozen=True, eq=True)
class Sqrt(Expr):
    operand: Expr
    prec = 5


# -- formatting --------------------------------------------------------------

def _const_text(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_expr(e: Expr) -> str:
    if isinstance(e, Const):
        return _const_text(e.value)
    if isinstance(e, Sym):
        return e.symbol.text
    if isinstance(e, Sqrt):
        return f"sqrt({format_expr(e.operand)})"
    if isinstance(e, Neg):
        inner = format_expr(e.operand)
        return f"-({inner})" if e.operand.prec <= 3 else f"-{inner}"
    if isinstance(e, Pow):
        inner = format_expr(e.base)
        if e.base.prec < 5 or (isinstance(e.base, Const) and e.base.value.denominator != 1):
            inner = f"({inner})"
        return f"{inner}^{e.exp}"
    if isinstance(e, BinOp):
        p = e.prec
        left = format_expr(e.left)
        right = format_expr(e.right)
        lp = e.left.prec
        if isinstance(e.left, Const) and e.left.value.denominator != 1 and p == 2:
            lp = 2  # 1/2*x reads back as (1/2)*x, which is what we want
        if lp < p:
            left = f"({left})"
        rp = e.right.prec
        if isinstance(e.right, Const) and e.right.value.denominator != 1:
            rp = 2
        if isinstance(e.right, Const) and e.right.value < 0:
            rp = 3
        # right operand of - and / needs parentheses at equal precedence
        if rp < p or (rp == p and e.op in "-/"):
            right = f"({right})"
        return f"{left}{e.op}{right}"
    raise TypeError(f"not an expression: {e!r}")


# -- parsing -----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^(),])|(?P<bad>\S))"
)


class _Parser:
    def __init__(self, text: str, canonical: bool):
        self.text = text
        self.canonical = canonical
        self.pos = 0

    def error(self, msg: str) -> GeoSyntaxError:
        return GeoSyntaxError(f"{msg} at column {self.pos} in {self.text!r}")

    def peek(self) -> tuple[str, str] | None:
        m = _TOKEN.match(self.text, self.pos)
        if not m or m.end() == self.pos:
            return None
        for k in ("num", "name", "op", "bad"):
            if m.group(k) is not None:
                return k, m.group(k)
        return None  # pragma: no cover

    def take(self) -> tuple[str, str]:
        m = _TOKEN.match(self.text, self.pos)
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end")
        self.pos = m.end()
        return tok

    def expect(self, op: str) -> None:
        tok = self.take()
        if tok != ("op", op):
            raise self.error(f"expected {op!r}")

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek() is not None:
            raise self.error("trailing input")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while (t := self.peek()) in (("op", "+"), ("op", "-")):
            self.take()
            e = BinOp(t[1], e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while (t := self.peek()) in (("op", "*"), ("op", "/")):
            self.take()
            e = BinOp(t[1], e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.peek() == ("op", "-"):
            self.take()
            return Neg(self.unary())
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            kind, val = self.take()
            if kind != "num" or "." in val:
                raise self.error("exponent must be an integer")
            return Pow(base, int(val))
        return base

    def atom(self) -> Expr:
        kind, val = self.take()
        if kind == "num":
            return Const(Fraction(val))
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "name":
            if self.peek() == ("op", "("):
                self.take()
                if val == "sqrt":
                    e = self.expr()
                    self.expect(")")
                    return Sqrt(e)
                return Sym(self.call(val))
            return Sym(var(val))
        raise self.error(f"unexpected {val!r}")

    def call(self, name: str) -> Symbol:
        close = self.text.find(")", self.pos)
        if close < 0:
            raise self.error("unclosed call")
        raw = self.text[self.pos:close]
        self.pos = close + 1
        try:
            if name in MEASURE_KINDS:
                pts = split_pattern(raw.replace(" ", ""))
                if self.canonical and not any(p.startswith("?") for p in pts):
                    return measure(name, pts)
                return Symbol(name, pts)
            args = tuple(a.strip() for a in raw.split(",") if a.strip())
            return Symbol(name, args)
        except GeoSyntaxError:
            raise
        except Exception as exc:  # malformed entity inside a symbol
            raise self.error(str(exc)) from exc


def parse_expression(text: str, canonical: bool = True) -> Expr:
    """Parse ``text`` into an :class:`Expr`; constants are exact rationals."""
    return _Parser(text, canonical).parse()


# -- evaluation / folding ----------------------------------------------------

def fold(e: Expr) -> Expr:
    """Constant-fold rational sub-expressions."""
    if isinstance(e, (Const, Sym)):
        return e
    if isinstance(e, Neg):
        x = fold(e.operand)
        return Const(-x.value) if isinstance(x, Const) else Neg(x)
    if isinstance(e, Pow):
        b = fold(e.base)
        return Const(b.value ** e.exp) if isinstance(b, Const) else Pow(b, e.exp)
    if isinstance(e, Sqrt):
        x = fold(e.operand)
        if isinstance(x, Const) and x.value >= 0:
            r = Radical.sqrt_of(x.value).rational()
            if r is not None:
                return Const(r)
        return Sqrt(x)
    if isinstance(e, BinOp):
        a, b = fold(e.left), fold(e.right)
        if isinstance(a, Const) and isinstance(b, Const):
            if e.op == "+":
                return Const(a.value + b.value)
            if e.op == "-":
                return Const(a.value - b.value)
            if e.op == "*":
                return Const(a.value * b.value)
            if b.value != 0:
                return Const(a.value / b.value)
        return BinOp(e.op, a, b)
    raise TypeError(e)


def symbols_of(e: Expr) -> set[Symbol]:
    if isinstance(e, Sym):
        return {e.symbol}
    if isinstance(e, Const):
        return set()
    if isinstance(e, BinOp):
        return symbols_of(e.left) | symbols_of(e.right)
    if isinstance(e, (Neg, Sqrt)):
        return symbols_of(e.operand)
    if isinstance(e, Pow):
        return symbols_of(e.base)
    raise TypeError(e)


def map_symbols(e: Expr, fn: Callable[[Symbol], Expr]) -> Expr:
    if isinstance(e, Sym):
        return fn(e.symbol)
    if isinstance(e, Const):
        return e
    if isinstance(e, BinOp):
        return BinOp(e.op, map_symbols(e.left, fn), map_symbols(e.right, fn))
    if isinstance(e, Neg):
        return Neg(map_symbols(e.operand, fn))
    if isinstance(e, Sqrt):
        return Sqrt(map_symbols(e.operand, fn))
    if isinstance(e, Pow):
        return Pow(map_symbols(e.base, fn), e.exp)
    raise TypeError(e)


def evaluate(e: Expr, env: Mapping[Symbol, Radical]) -> Radical:
    """Exact evaluation; raises KeyError for unknown symbols, NotExact when
    the result leaves the radical field, ZeroDivisionError on a zero divisor."""
    if isinstance(e, Const):
        return Radical.of(e.value)
    if isinstance(e, Sym):
        return env[e.symbol]
    if isinstance(e, Neg):
        return -evaluate(e.operand, env)
    if isinstance(e, Pow):
        return evaluate(e.base, env) ** e.exp
    if isinstance(e, Sqrt):
        return evaluate(e.operand, env).sqrt()
    a, b = evaluate(e.left, env), evaluate(e.right, env)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    return a / b


def evaluate_float(e: Expr, env: Callable[[Symbol], float]) -> float:
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Sym):
        return env(e.symbol)
    if isinstance(e, Neg):
        return -evaluate_float(e.operand, env)
    if isinstance(e, Pow):
        return evaluate_float(e.base, env) ** e.exp
    if isinstance(e, Sqrt):
        v = evaluate_float(e.operand, env)
        if v < 0:
            raise ValueError("sqrt of negative")
        return v ** 0.5
    a, b = evaluate_float(e.left, env), evaluate_float(e.right, env)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if b == 0:
        raise ZeroDivisionError("division by zero")
    return a / b


def radical_expr(r: Radical) -> Expr:
    return parse_expression(r.text())


# -- polynomials -------------------------------------------------------------

Monomial = tuple[tuple[Symbol, int], ...]


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    d: dict[Symbol, int] = dict(a)
    for s, k in b:
        d[s] = d.get(s, 0) + k
    return tuple(sorted(d.items(), key=lambda t: t[0].text))


def mono_degree(m: Monomial) -> int:
    return sum(k for _, k in m)


def mono_text(m: Monomial) -> str:
    return "*".join(s.text if k == 1 else f"{s.text}^{k}" for s, k in m)


def mono_key(m: Monomial) -> tuple:
    return (-mono_degree(m), mono_text(m))


class Poly:
    """Sparse polynomial with :class:`Radical` coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[Monomial, Radical] | None = None):
        self.terms = {m: c for m, c in (terms or {}).items() if not c.is_zero()}

    @classmethod
    def const(cls, c) -> "Poly":
        return cls({(): Radical.of(c)})

    @classmethod
    def sym(cls, s: Symbol) -> "Poly":
        return cls({((s, 1),): Radical.of(1)})

    def __add__(self, o: "Poly") -> "Poly":
        out = dict(self.terms)
        for m, c in o.terms.items():
            out[m] = out.get(m, Radical()) + c
        return Poly(out)

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, o: "Poly") -> "Poly":
        return self + (-o)

    def __mul__(self, o: "Poly") -> "Poly":
        out: dict[Monomial, Radical] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in o.terms.items():
                m = mono_mul(m1, m2)
                out[m] = out.get(m, Radical()) + c1 * c2
        return Poly(out)

    def scale(self, c: Radical) -> "Poly":
        return Poly({m: v * c for m, v in self.terms.items()})

    def constant(self) -> Radical:
        return self.terms.get((), Radical())

    def is_constant(self) -> bool:
        return all(m == () for m in self.terms)

    def symbols(self) -> set[Symbol]:
        return {s for m in self.terms for s, _ in m}

    def degree(self) -> int:
        return max((mono_degree(m) for m in self.terms), default=0)

    def substitute(self, env: Mapping[Symbol, Radical]) -> "Poly":
        out: dict[Monomial, Radical] = {}
        for m, c in self.terms.items():
            rest = []
            for s, k in m:
                if s in env:
                    c = c * env[s] ** k
                else:
                    rest.append((s, k))
            key = tuple(rest)
            out[key] = out.get(key, Radical()) + c
        return Poly(out)


def to_poly(e: Expr) -> Poly:
    if isinstance(e, Const):
        return Poly.const(e.value)
    if isinstance(e, Sym):
        return Poly.sym(e.symbol)
    if isinstance(e, Neg):
        return -to_poly(e.operand)
    if isinstance(e, Pow):
        base = to_poly(e.base)
        out = Poly.const(1)
        for _ in range(e.exp):
            out = out * base
        return out
    if isinstance(e, Sqrt):
        inner = to_poly(e.operand)
        if not inner.is_constant():
            raise NonPolynomial("sqrt of a symbolic expression")
        return Poly({(): inner.constant().sqrt()})
    a, b = to_poly(e.left), to_poly(e.right)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if not b.is_constant():
        raise NonPolynomial("division by a symbolic expression")
    if b.constant().is_zero():
        raise ZeroDivisionError("division by zero")
    return a.scale(Radical.of(1) / b.constant())


def _coef_text(c: Radical) -> str:
    if len(c.terms) > 1:
        return f"({c.text()})"
    return c.text()


def _side_text(terms: list[tuple[Monomial, Radical]], const: Radical) -> str:
    parts: list[str] = []
    for m, c in terms:
        body = mono_text(m)
        if c == Radical.of(1):
            parts.append("+" + body)
        else:
            parts.append("+" + _coef_text(c) + "*" + body)
    if not const.is_zero():
        if len(const.terms) > 1:
            parts.append("+(" + const.text() + ")" if parts else "+" + const.text())
        elif const.sign() < 0:
            parts.append("-" + (-const).text())
        else:
            parts.append("+" + const.text())
    if not parts:
        return "0"
    out = "".join(parts)
    return out[1:] if out.startswith("+") else out


def poly_equation_text(p: Poly) -> str | None:
    """Canonical ``lhs=rhs`` text for ``p == 0``; ``None`` when trivial.

    The leading monomial (highest degree, then lexicographic) is scaled to
    coefficient one; positive terms stay left, negated negative terms and the
    negated constant go right.
    """
    monos = sorted((m for m in p.terms if m != ()), key=mono_key)
    if not monos:
        return None
    p = p.scale(Radical.of(1) / p.terms[monos[0]])
    left = [(m, p.terms[m]) for m in monos if p.terms[m].sign() > 0]
    right = [(m, -p.terms[m]) for m in monos if p.terms[m].sign() < 0]
    return f"{_side_text(left, Radical())}={_side_text(right, -p.constant())}"


@dataclass(frozen=True)
class Equation:
    """A canonical equation ``lhs = rhs`` over measure (or free) symbols."""

    text: str
    lhs: Expr
    rhs: Expr

    @staticmethod
    def make(lhs: Expr, rhs: Expr) -> "Equation":
        try:
            p = to_poly(lhs) - to_poly(rhs)
        except (NonPolynomial, NotExact, ZeroDivisionError):
            a, b = format_expr(fold(lhs)), format_expr(fold(rhs))
            a, b = sorted((a, b))
            return Equation(f"{a}={b}", parse_expression(a), parse_expression(b))
        text = poly_equation_text(p)
        if text is None:
            if p.constant().is_zero():
                raise ValueError("trivial equation 0=0")
            raise ValueError("contradictory constant equation")
        left, right = text.split("=")
        return Equation(text, parse_expression(left), parse_expression(right))

    @staticmethod
    def parse(text: str, canonical: bool = True) -> "Equation":
        if text.count("=") != 1:
            raise GeoSyntaxError(f"equation needs exactly one '=': {text!r}")
        a, b = text.split("=")
        lhs, rhs = parse_expression(a, canonical), parse_expression(b, canonical)
        if not canonical:
            return Equation(f"{format_expr(lhs)}={format_expr(rhs)}", lhs, rhs)
        return Equation.make(lhs, rhs)

    def poly(self) -> Poly | None:
        # memoised: Poly values are never mutated in place
        try:
            return self.__dict__["_poly"]
        except KeyError:
            pass
        try:
            p = to_poly(self.lhs) - to_poly(self.rhs)
        except (NonPolynomial, NotExact, ZeroDivisionError):
            p = None
        self.__dict__["_poly"] = p
        return p

    def symbols(self) -> set[Symbol]:
        return symbols_of(self.lhs) | symbols_of(self.rhs)

    def value(self) -> tuple[Symbol, Radical] | None:
        """``(symbol, value)`` when this is a value fact ``sym = number``."""
        if isinstance(self.lhs, Sym) and not symbols_of(self.rhs):
            try:
                return self.lhs.symbol, evaluate(self.rhs, {})
            except (NotExact, ZeroDivisionError):
                return None
        return None

    def __str__(self) -> str:
        return self.text

    def __lt__(self, other: "Equation") -> bool:
        return self.text < other.text


def value_equation(sym: Symbol, value: Radical) -> Equation:
    return Equation.make(Sym(sym), radical_expr(value))
