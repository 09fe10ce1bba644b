"""Exact numbers of the form ``q0 + q1*sqrt(d1) + q2*sqrt(d2) + ...``.

Coefficients are rationals and every ``d`` is a square-free integer greater
than one.  The set is closed under addition, subtraction and multiplication;
division is supported when the divisor has at most one irrational term, and
square roots are supported for rational non-negative arguments.  Anything
outside that raises :class:`~geogen.errors.NotExact` so callers can fall
back to leaving a quantity unsolved.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Union

from geogen.errors import NotExact

NumberLike = Union["Radical", Fraction, int]


@lru_cache(maxsize=4096)
def _square_split(n: int) -> tuple[int, int]:
    """Return ``(s, d)`` with ``n == s*s*d`` and ``d`` square-free."""
    if n == 0:
        return 0, 1
    s, d = 1, 1
    p = 2
    rest = n
    while p * p <= rest and p < 100_000:
        e = 0
        while rest % p == 0:
            rest //= p
            e += 1
        s *= p ** (e // 2)
        if e % 2:
            d *= p
        p += 1 if p == 2 else 2
    r = math.isqrt(rest)
    if r * r == rest:
        s *= r
    else:
        d *= rest
    return s, d


class Radical:
    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: dict[int, Fraction] | None = None):
        clean = []
        for d, c in (terms or {}).items():
            if c:
                clean.append((d, c if type(c) is Fraction else Fraction(c)))
        clean.sort()
        self._terms = tuple(clean)
        self._hash = hash(self._terms)

    # -- construction ------------------------------------------------------
    @classmethod
    def of(cls, value: NumberLike) -> "Radical":
        if isinstance(value, Radical):
            return value
        if isinstance(value, float):
            raise NotExact("floats are not exact; pass a Fraction")
        return cls({1: Fraction(value)})

    @classmethod
    def sqrt_of(cls, value: NumberLike) -> "Radical":
        r = cls.of(value)
        q = r.rational()
        if q is None:
            raise NotExact(f"sqrt of irrational {r.text()}")
        if q < 0:
            raise NotExact(f"sqrt of negative {q}")
        # sqrt(p/q) = sqrt(p*q)/q
        s, d = _square_split(q.numerator * q.denominator)
        return cls({d: Fraction(s, q.denominator)})

    # -- queries -----------------------------------------------------------
    @property
    def terms(self) -> tuple[tuple[int, Fraction], ...]:
        return self._terms

    def rational(self) -> Fraction | None:
        if not self._terms:
            return Fraction(0)
        if len(self._terms) == 1 and self._terms[0][0] == 1:
            return self._terms[0][1]
        return None

    def is_zero(self) -> bool:
        return not self._terms

    def __float__(self) -> float:
        return float(sum(float(c) * math.sqrt(d) for d, c in self._terms))

    def sign(self) -> int:
        if not self._terms:
            return 0
        v = float(self)
        if v == 0.0:  # pragma: no cover - cancellation below float precision
            return 0
        return 1 if v > 0 else -1

    def __bool__(self) -> bool:
        return bool(self._terms)

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other: NumberLike) -> "Radical":
        other = Radical.of(other)
        out = dict(self._terms)
        for d, c in other._terms:
            out[d] = out.get(d, Fraction(0)) + c
        return Radical(out)

    __radd__ = __add__

    def __neg__(self) -> "Radical":
        return Radical({d: -c for d, c in self._terms})

    def __sub__(self, other: NumberLike) -> "Radical":
        return self + (-Radical.of(other))

    def __rsub__(self, other: NumberLike) -> "Radical":
        return Radical.of(other) - self

    def __mul__(self, other: NumberLike) -> "Radical":
        other = Radical.of(other)
        out: dict[int, Fraction] = {}
        for d1, c1 in self._terms:
            for d2, c2 in other._terms:
                s, d = _square_split(d1 * d2)
                out[d] = out.get(d, Fraction(0)) + c1 * c2 * s
        return Radical(out)

    __rmul__ = __mul__

    def __truediv__(self, other: NumberLike) -> "Radical":
        other = Radical.of(other)
        if other.is_zero():
            raise ZeroDivisionError("division by zero radical")
        q = other.rational()
        if q is not None:
            return Radical({d: c / q for d, c in self._terms})
        terms = dict(other._terms)
        irr = [d for d in terms if d != 1]
        if len(irr) == 1:
            d = irr[0]
            a, b = terms.get(1, Fraction(0)), terms[d]
            # (a + b sqrt d)(a - b sqrt d) = a^2 - b^2 d
            conj = Radical({1: a, d: -b})
            norm = a * a - b * b * d
            return (self * conj) / Radical.of(norm)
        raise NotExact(f"cannot divide by {other.text()}")

    def __rtruediv__(self, other: NumberLike) -> "Radical":
        return Radical.of(other) / self

    def __pow__(self, n: int) -> "Radical":
        if not isinstance(n, int) or n < 0:
            raise NotExact("only non-negative integer powers")
        out = Radical.of(1)
        for _ in range(n):
            out = out * self
        return out

    def sqrt(self) -> "Radical":
        return Radical.sqrt_of(self)

    # -- comparison --------------------------------------------------------
    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Radical.of(other)
        if not isinstance(other, Radical):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return self._hash

    # -- text --------------------------------------------------------------
    def text(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for d, c in self._terms:
            sign = "-" if c < 0 else "+"
            a = abs(c)
            if d == 1:
                body = _frac_text(a)
            else:
                root = f"sqrt({d})"
                body = root if a.numerator == 1 else f"{a.numerator}*{root}"
                if a.denominator != 1:
                    body += f"/{a.denominator}"
            parts.append((sign, body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            out += sign + body
        return out

    def __repr__(self) -> str:
        return f"Radical({self.text()})"

    def __str__(self) -> str:
        return self.text()


def _frac_text(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"
