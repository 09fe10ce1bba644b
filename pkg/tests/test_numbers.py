import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from geogen.errors import NotExact
from geogen.formal.numbers import Radical, _square_split

fracs = st.fractions(min_value=-50, max_value=50, max_denominator=12)
surds = st.sampled_from([2, 3, 5, 6, 7])


@st.composite
def radicals(draw):
    terms = {1: draw(fracs)}
    for d in draw(st.lists(surds, max_size=2, unique=True)):
        terms[d] = draw(fracs)
    return Radical(terms)


def test_sqrt_simplifies():
    assert Radical.sqrt_of(52).text() == "2*sqrt(13)"
    assert Radical.sqrt_of(Fraction(1, 2)).text() == "sqrt(2)/2"
    assert Radical.sqrt_of(49) == 7


def test_sqrt_of_negative_or_irrational_is_not_exact():
    with pytest.raises(NotExact):
        Radical.sqrt_of(-4)
    with pytest.raises(NotExact):
        Radical.sqrt_of(Radical.sqrt_of(2))


def test_floats_rejected():
    with pytest.raises(NotExact):
        Radical.of(0.5)


def test_division_by_conjugate():
    x = Radical({1: 1, 2: 1})  # 1 + sqrt(2)
    assert (Radical.of(1) / x) == Radical({1: -1, 2: 1})


def test_text_forms():
    assert Radical({1: Fraction(-3, 2), 5: 1}).text() == "-3/2+sqrt(5)"
    assert Radical().text() == "0"


@given(st.integers(1, 10**6))
def test_square_split_oracle(n):
    s, d = _square_split(n)
    assert s * s * d == n
    # d square-free: no square of a prime up to sqrt(d) divides it
    assert all(d % (p * p) for p in range(2, math.isqrt(d) + 1))


@given(radicals(), radicals(), radicals())
def test_ring_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    assert a - a == Radical()


@given(radicals(), radicals())
def test_float_agrees(a, b):
    assert math.isclose(float(a * b), float(a) * float(b), rel_tol=1e-9, abs_tol=1e-9)
    assert math.isclose(float(a + b), float(a) + float(b), rel_tol=1e-9, abs_tol=1e-9)


@given(fracs.filter(lambda q: q >= 0))
def test_sqrt_squares_back(q):
    assert Radical.sqrt_of(q) ** 2 == q


@given(radicals(), fracs.filter(bool), fracs, surds)
def test_division_inverts_multiplication(a, p, q, d):
    b = Radical({1: q, d: p})  # one irrational term: always invertible
    assert (a * b) / b == a
