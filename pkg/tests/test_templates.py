import pytest
from hypothesis import given, settings, strategies as st

from conftest import problems
from geogen.deduction.chase import linearize, traceback
from geogen.deduction.state import parse_fact
from geogen.errors import GeoSyntaxError, MissingTemplate, TranslationFailed
from geogen.qa.templates import load_templates
from geogen.verifier.check import infer_binding


@pytest.fixture(scope="module")
def steps(reg):
    out = []
    for p in problems(reg, 31, 10):
        for n in p.graph.nodes:
            if n.layer > 0:
                out.extend(linearize(traceback(p.graph, n.text), reg))
    return out


def test_step_round_trip(reg, templates, steps):
    assert len(steps) > 100
    for s in steps:
        conds, tid, concl = templates.parse_step(templates.step_text(s), reg)
        assert [c.text for c in conds] == [c.text for c in s.conditions]
        assert tid == s.theorem_id and concl.text == s.conclusion.text


def test_binding_recovered(reg, templates, steps):
    for s in steps:
        if s.is_algebra:
            continue
        conds, tid, concl = templates.parse_step(templates.step_text(s), reg)
        assert infer_binding(conds, tid, concl, reg) == s.binding


def test_midsegment_text(reg, templates):
    f = reg.parse_literal("IsMidsegmentOfTriangle(DE,ABC)")
    assert templates.fact_text(f) == "DE is a midsegment of triangle ABC"
    assert templates.parse_fact("DE is a midsegment of triangle ABC", reg).text == f.text


def test_measure_text(reg, templates):
    e = parse_fact("MeasureOfAngle(ABC)+LengthOfLine(DE)=sqrt(2)", reg)
    txt = templates.fact_text(e)
    assert "∠" in txt and "sqrt(2)" in txt
    assert templates.parse_fact(txt, reg).text == e.text


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="abcXYZ ,.()=+∠", min_size=1, max_size=40))
def test_garbage_fails_cleanly(reg, templates, s):
    try:
        templates.parse_step(s, reg)
    except TranslationFailed:
        pass


def test_unknown_theorem_phrase(reg, templates):
    with pytest.raises(TranslationFailed):
        templates.parse_step("By the law of nowhere, AB = 3.", reg)


def test_missing_predicate_template(reg):
    t = load_templates("theorem 1: one\n")
    with pytest.raises(MissingTemplate):
        t.fact_text(reg.parse_literal("Line(AB)"))


def test_separator_in_template_rejected():
    with pytest.raises(GeoSyntaxError):
        load_templates("predicate Line: {0}, a line\n")
    with pytest.raises(GeoSyntaxError):
        load_templates("theorem 1: this and that\n")


def test_duplicate_theorem_phrase_rejected():
    with pytest.raises(GeoSyntaxError):
        load_templates("theorem 1: same\ntheorem 2: same\n")
