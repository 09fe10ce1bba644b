import json

import pytest

from geogen.deduction.chase import (
    ChaseLimits,
    DeductionGraph,
    forward_chase,
    linearize,
    replay_step,
    traceback,
)
from geogen.deduction.matching import apply_theorem, match_premises
from geogen.deduction.state import State, parse_fact
from geogen.errors import InvalidBinding, LimitExceeded, UnknownTarget

MIDSEG = ["Triangle(ABC)", "Line(AB)", "Line(BC)", "Line(AC)", "IsMidpointOfLine(D,AB)", "Collinear(ADB)",
          "IsMidpointOfLine(E,AC)", "Collinear(AEC)", "Line(DE)", "LengthOfLine(BC)=8"]


def facts(reg, texts=MIDSEG):
    return [parse_fact(t, reg) for t in texts]


def test_midsegment_single_binding(reg):
    st = State.from_facts(facts(reg))
    [b] = match_premises(st, reg.theorem("midsegment_judgment"), reg)
    app = apply_theorem(st, reg.theorem(6), b, reg)
    assert [f.text for f in app.new] == ["IsMidsegmentOfTriangle(DE,ABC)"]


def test_apply_rejects_bad_binding(reg):
    st = State.from_facts(facts(reg))
    with pytest.raises(InvalidBinding):
        apply_theorem(st, reg.theorem(6), {"?A": "B", "?B": "A", "?C": "C", "?D": "D", "?E": "E"}, reg)


def test_midsegment_path(reg):
    g = forward_chase(facts(reg), reg)
    target = "LengthOfLine(DE)=4"
    assert g.layer_of(target) == 3
    steps = linearize(traceback(g, target), reg)
    assert [s.theorem_name for s in steps] == ["midsegment_judgment", "midsegment_property", "substitution"]
    assert steps[0].conclusion.text == "IsMidsegmentOfTriangle(DE,ABC)"
    assert all(replay_step(s, reg) for s in steps)


def test_layers_are_first_derivation_sweeps(reg, sample_problems):
    for p in sample_problems:
        g = p.graph
        for e in g.edges:
            assert all(g.nodes[q].layer < g.nodes[e.conclusion].layer for q in e.premises)
        for n in g.nodes:
            if n.layer > 0:
                assert any(g.nodes[q].layer == n.layer - 1
                           for eid in g.incoming[n.id] for q in g.edges[eid].premises)


def test_traceback_is_minimal_and_linearize_is_topological(reg, sample_problems):
    for p in sample_problems[:6]:
        for n in p.graph.nodes[-5:]:
            sub = traceback(p.graph, n.text)
            assert sum(1 for m in sub.nodes if m.layer > 0) == len(sub.edges)
            seen = {m.text for m in sub.nodes if m.layer == 0}
            for s in linearize(sub, reg):
                assert all(c.text in seen for c in s.conditions)
                seen.add(s.conclusion.text)
                assert replay_step(s, reg)


def test_graph_json_round_trip(reg):
    g = forward_chase(facts(reg), reg)
    g2 = DeductionGraph.from_dict(json.loads(g.to_json()), reg)
    assert g2.to_json() == g.to_json()


def test_unknown_target(reg):
    g = forward_chase(facts(reg), reg)
    with pytest.raises(UnknownTarget):
        traceback(g, "LengthOfLine(DE)=5")


def test_limits(reg):
    g = forward_chase(facts(reg), reg, ChaseLimits(max_layers=1))
    assert g.truncated and g.depth == 1
    with pytest.raises(LimitExceeded) as exc:
        forward_chase(facts(reg), reg, ChaseLimits(max_nodes=12))
    assert exc.value.graph is not None
    with pytest.raises(LimitExceeded):
        forward_chase(facts(reg), reg, ChaseLimits(max_bindings_per_theorem=1))


def test_chase_is_deterministic(reg):
    a = forward_chase(facts(reg), reg).to_json()
    b = forward_chase(list(reversed(facts(reg))), reg).to_json()
    assert json.loads(a)["nodes"][10:] == json.loads(b)["nodes"][10:]
