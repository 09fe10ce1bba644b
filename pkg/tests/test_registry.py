import pytest

from geogen.errors import (
    ArityMismatch,
    DanglingReference,
    DuplicateName,
    GeoSyntaxError,
    UnknownPredicate,
)
from geogen.formal.registry import RESERVED_THEOREM_ID, builtin_registry_text, load_registry

MINI = """
predicate Line(AB:segment) kind=entity constraints=[]
predicate LengthOfLine(AB:segment) kind=measure
predicate IsMidpointOfLine(M:point, AB:segment) kind=relation constraints=[x(M)=(x(A)+x(B))/2; y(M)=(y(A)+y(B))/2]
theorem 1 midpoint_property: premises=[IsMidpointOfLine(?M,?A?B)] conclusions=[LengthOfLine(?A?M)=LengthOfLine(?M?B)]
"""


def test_core_registry_contents(reg):
    assert len(reg.theorems) == 40
    assert reg.theorem("midsegment_property").id == 7
    assert reg.theorem_name(1000) == "substitution"
    assert [p.name for p in reg.by_kind("measure")] == [
        "AreaOfPolygon", "LengthOfLine", "MeasureOfAngle", "PerimeterOfPolygon"]


def test_literal_canonicalization(reg):
    assert reg.parse_literal("Triangle(CBA)").text == "Triangle(ABC)"
    assert reg.parse_literal("ParallelBetweenLine(DE,BA)").text == "ParallelBetweenLine(AB,DE)"
    assert reg.parse_literal("IsMidsegmentOfTriangle(ED,CAB)").text == "IsMidsegmentOfTriangle(DE,ABC)"


def test_literal_errors(reg):
    with pytest.raises(UnknownPredicate):
        reg.parse_literal("Pentagon(ABCDE)")
    with pytest.raises(ArityMismatch):
        reg.parse_literal("IsMidpointOfLine(M)")


def test_closure_adds_constructions(reg):
    texts = [l.text for l in reg.closure([reg.parse_literal("Square(ABCD)")])]
    assert texts[0] == "Square(ABCD)"
    assert {"Rectangle(ABCD)", "Rhombus(ABCD)", "Parallelogram(ABCD)", "Line(AB)", "Line(AD)"} <= set(texts)


def test_mini_registry_loads():
    r = load_registry(MINI)
    assert r.theorem(1).premises[0].predicate == "IsMidpointOfLine"


def test_builtin_text_round_trips():
    assert len(load_registry(builtin_registry_text()).theorems) == 40


@pytest.mark.parametrize("text, err", [
    (MINI + "theorem 1 again: premises=[Line(?A?B)] conclusions=[Line(?B?A)]\n", DuplicateName),
    (MINI + "theorem 2 t: premises=[Nope(?A?B)] conclusions=[Line(?A?B)]\n", DanglingReference),
    (MINI + f"theorem {RESERVED_THEOREM_ID} t: premises=[Line(?A?B)] conclusions=[Line(?A?B)]\n", GeoSyntaxError),
    (MINI + "predicate Broken(\n", GeoSyntaxError),
])
def test_registry_rejects(text, err):
    with pytest.raises(err):
        load_registry(text)


def test_syntax_error_reports_line():
    with pytest.raises(GeoSyntaxError) as exc:
        load_registry(MINI + "this is not a declaration\n")
    assert exc.value.line == MINI.count("\n") + 1
