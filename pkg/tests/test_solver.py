from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from geogen.deduction.solver import ELIMINATION, ISOLATION, SUBSTITUTION, solve_equations
from geogen.errors import InconsistentSystem
from geogen.formal.expr import Equation, measure
from geogen.formal.numbers import Radical

X, Y, Z = (measure("LengthOfLine", s) for s in ("AB", "BC", "CD"))


def eqs(*texts):
    return [Equation.parse(t) for t in texts]


def test_substitution_midsegment():
    res = solve_equations(eqs("LengthOfLine(DE)=LengthOfLine(BC)/2", "LengthOfLine(BC)=8"), {})
    [step] = res.steps
    assert step.theorem_id == SUBSTITUTION
    assert step.conclusion.text == "LengthOfLine(DE)=4"


def test_isolation_takes_positive_root():
    res = solve_equations(eqs("LengthOfLine(AB)^2+LengthOfLine(BC)^2=LengthOfLine(AC)^2",
                              "LengthOfLine(AB)=4", "LengthOfLine(BC)=6"), {})
    [step] = res.steps
    assert step.theorem_id == ISOLATION
    assert step.value.text() == "2*sqrt(13)"


def test_elimination_two_unknowns():
    res = solve_equations(eqs("LengthOfLine(AB)+LengthOfLine(BC)=10", "LengthOfLine(AB)=LengthOfLine(BC)+2"), {})
    assert res.new_known == {X: Radical.of(6), Y: Radical.of(4)}
    assert {s.theorem_id for s in res.steps} == {ELIMINATION}


def test_inconsistent_values():
    with pytest.raises(InconsistentSystem):
        solve_equations(eqs("LengthOfLine(AB)=LengthOfLine(BC)", "LengthOfLine(AB)=1", "LengthOfLine(BC)=2"), {})


def test_rounds_only_read_start_of_round_values():
    # BC needs AB, which is itself derived in round one
    e = eqs("LengthOfLine(AB)=2*LengthOfLine(CD)", "LengthOfLine(BC)=LengthOfLine(AB)+1")
    one = solve_equations(e, {Z: Radical.of(3)}, max_rounds=1)
    assert one.new_known == {X: Radical.of(6)}
    full = solve_equations(e, {Z: Radical.of(3)})
    assert full.new_known[Y] == 7


ints = st.integers(-6, 6)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(ints, ints, ints), min_size=3, max_size=3), st.tuples(ints, ints, ints))
def test_planted_linear_solution(rows, sol):
    """Every value the solver reports agrees with a planted solution."""
    syms = (X, Y, Z)
    system = []
    for coeffs in rows:
        if not any(coeffs):
            continue
        rhs = sum(c * s for c, s in zip(coeffs, sol))
        lhs = "+".join(f"({c})*{s.text}" for c, s in zip(coeffs, syms) if c)
        system.append(Equation.parse(f"{lhs}=({rhs})"))
    planted = dict(zip(syms, sol))
    res = solve_equations(system, {})
    for s, v in res.new_known.items():
        assert v == planted[s]
    determined = set(res.new_known) | {e.value()[0] for e in system if e.value() is not None}
    # full-rank 3x3 integer systems are always solved completely
    import numpy as np
    m = np.array([r for r in rows if any(r)], dtype=float)
    if m.shape[0] == 3 and abs(np.linalg.det(m)) > 1e-9:
        assert determined == set(syms)


@given(st.fractions(Fraction(1, 4), 30, max_denominator=5), st.fractions(Fraction(1, 4), 30, max_denominator=5))
def test_pythagoras_value(a, b):
    res = solve_equations(eqs("LengthOfLine(AB)^2+LengthOfLine(BC)^2=LengthOfLine(AC)^2",
                              f"LengthOfLine(AB)=({a})", f"LengthOfLine(BC)=({b})"), {})
    [step] = res.steps
    assert step.value ** 2 == a * a + b * b
    assert float(step.value) > 0
