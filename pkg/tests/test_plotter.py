import numpy as np
import pytest

from geometry_oracle import max_residual
from geogen.errors import MissingConstraintTemplate, UnsatisfiedAfterRetries
from geogen.formal.registry import load_registry
from geogen.plotter.constraints import build_constraints, solve_coordinates
from geogen.plotter.diagram import Diagram, SynthConfig
from geogen.plotter.geometry import literal_holds, tri_area
from geogen.plotter.render import render_png, render_svg
from geogen.plotter.sampling import point_name
from geogen.plotter.synth import synthesize


@pytest.fixture(scope="module")
def diagrams(reg):
    out = []
    for i in range(60):
        try:
            out.append(synthesize(3, i, reg))
        except UnsatisfiedAfterRetries:
            pass
    return out


def test_point_names():
    assert [point_name(i) for i in (0, 25, 26, 27)] == ["A", "Z", "A1", "B1"]


def test_yield_on_small_batch(diagrams):
    assert len(diagrams) >= 55


def test_generating_literals_hold_by_independent_oracle(diagrams):
    for d in diagrams:
        for t in d.initial:
            assert max_residual(t, d.points) <= 1e-6, (d.id, t)


def test_literal_holds_agrees(reg, diagrams):
    for d in diagrams:
        for t in d.initial:
            assert literal_holds(reg.parse_literal(t), reg, d.points)


def test_triangles_are_not_degenerate(reg, diagrams):
    cfg = SynthConfig()
    for d in diagrams:
        for t in d.initial:
            if t.startswith(("Triangle(", "RightTriangle(", "IsoscelesTriangle(")):
                a, b, c = reg.parse_literal(t).args[0].points
                assert tri_area(d.points[a], d.points[b], d.points[c]) >= cfg.min_area


def test_perturbed_diagram_fails(reg, diagrams):
    d = next(d for d in diagrams if any(t.startswith("IsMidpointOfLine") for t in d.literals))
    lit = next(reg.parse_literal(t) for t in d.literals if t.startswith("IsMidpointOfLine"))
    m = lit.args[0].text
    pts = dict(d.points)
    pts[m] = (pts[m][0] + 0.5, pts[m][1])
    assert not literal_holds(lit, reg, pts)


def test_synthesis_is_deterministic(reg):
    a, b = synthesize(9, 4, reg), synthesize(9, 4, reg)
    assert a.to_json() == b.to_json()
    assert render_svg(a) == render_svg(b)


def test_sidecar_round_trip(diagrams):
    d = diagrams[0]
    assert Diagram.from_dict(d.to_dict()).to_json() == d.to_json()


def test_svg_contents(diagrams):
    d = diagrams[0]
    svg = render_svg(d).decode()
    assert svg.startswith("<svg") or svg.startswith("<?xml")
    assert svg.count("<line") == len(d.segments)
    for p in d.points:
        assert f">{p}</text>" in svg


def test_png(diagrams):
    assert render_png(diagrams[0])[:8] == b"\x89PNG\r\n\x1a\n"


def test_missing_constraint_template():
    r = load_registry("predicate Odd(AB:segment) kind=relation\n")
    with pytest.raises(MissingConstraintTemplate):
        build_constraints([r.parse_literal("Odd(AB)")], r)


def test_unsatisfiable_system_reports_diagnostics(reg):
    lits = [reg.parse_literal(t) for t in ("RightTriangle(ABC)", "EquilateralTriangle(ABC)")]
    sys_ = build_constraints(lits, reg)
    with pytest.raises(UnsatisfiedAfterRetries) as exc:
        solve_coordinates(sys_, np.random.default_rng(0), SynthConfig(), attempts=5)
    assert exc.value.diagnostics
