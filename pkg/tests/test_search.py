import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from search_scripts import invalid_lines, midsegment_case, mixed_script, replay_is_valid, scripted_generator
from geogen.deduction.chase import forward_chase, linearize, traceback
from geogen.errors import TransientError
from geogen.gateway import TERMINAL, EchoBackend, FlakyBackend, Gateway, GatewayConfig
from geogen.verifier.check import RuleTranslator
from geogen.verifier.search import (
    GEN_ERROR,
    MAX_ITER,
    NO_VALID,
    TERMINATED,
    GatewayGenerator,
    SearchConfig,
    tree_search,
    width_sweep,
)


@pytest.fixture(scope="module")
def case(reg, templates):
    return midsegment_case(reg, templates)


@pytest.fixture(scope="module")
def tr(reg, templates):
    return RuleTranslator(templates, reg)


def test_true_path_reproduced(reg, tr, case):
    problem, steps, target = case
    h = tree_search(problem, scripted_generator(steps), tr, reg, SearchConfig(width=1))
    assert h.steps() == steps and h.termination == TERMINATED
    assert h.accepted[-1].triple.conclusion.text == target.text


def test_all_invalid_stops_immediately(reg, tr, case):
    problem, steps, _ = case
    bad = invalid_lines(steps)
    h = tree_search(problem, scripted_generator(["\n".join(bad[:4])]), tr, reg, SearchConfig(width=4))
    assert h.accepted == [] and h.termination == NO_VALID
    assert len(h.iterations) == 1 and not any(c.verdict.valid for c in h.iterations[0])


def test_out_of_order_step_rejected(reg, tr, case):
    problem, steps, _ = case
    h = tree_search(problem, scripted_generator([steps[1]]), tr, reg)
    assert h.termination == NO_VALID
    assert h.iterations[0][0].verdict.code == "MissingCondition"


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([1, 2, 4, 8]))
def test_mixed_scripts_never_admit_invalid(reg, tr, case, seed, width):
    problem, steps, _ = case
    script = ["\n".join(c) for c in mixed_script(steps, random.Random(seed), width)]
    h = tree_search(problem, scripted_generator(script), tr, reg, SearchConfig(width=width, seed=seed))
    assert all(c.verdict.valid for c in h.accepted)
    assert replay_is_valid(problem, h, reg)
    assert h.termination in (TERMINATED, NO_VALID, MAX_ITER)


def test_history_bytes_are_seed_stable(reg, tr, case):
    problem, steps, _ = case
    script = ["\n".join(c) for c in mixed_script(steps, random.Random(3), 4)]

    def run():
        return tree_search(problem, scripted_generator(script), tr, reg, SearchConfig(width=4, seed=7)).to_json(reg)

    assert run() == run()
    json.loads(run())


def test_valid_choice_uses_seed(reg, templates, tr, case):
    problem, steps, _ = case
    g = forward_chase(problem.givens, reg)
    firsts = sorted({templates.step_text(linearize(traceback(g, n.text), reg)[-1])
                     for n in g.nodes if n.layer == 1})[:4]
    assert len(firsts) >= 2
    picks = set()
    for seed in range(12):
        h = tree_search(problem, scripted_generator(["\n".join(firsts)]), tr, reg,
                        SearchConfig(width=4, max_iterations=1, seed=seed))
        assert len(h.accepted) == 1
        picks.add(h.steps()[0])
    assert len(picks) > 1


def test_width_limits_candidates(reg, tr, case):
    problem, steps, _ = case
    script = ["\n".join(invalid_lines(steps)[:6])]
    h = tree_search(problem, scripted_generator(script), tr, reg, SearchConfig(width=2))
    assert len(h.iterations[0]) == 2


def test_max_iterations(reg, tr, case):
    problem, steps, _ = case
    h = tree_search(problem, scripted_generator(steps), tr, reg, SearchConfig(width=1, max_iterations=2))
    assert h.termination == MAX_ITER and len(h.accepted) == 2


def test_generator_error_keeps_history(reg, tr, case):
    problem, steps, _ = case
    gw = Gateway(GatewayConfig(max_attempts=1), FlakyBackend(EchoBackend(), 5, TransientError), sleep=lambda _: None)
    h = tree_search(problem, GatewayGenerator(gw), tr, reg)
    assert h.termination == GEN_ERROR and h.error.startswith("GeneratorError")


def test_width_sweep(reg, tr, case):
    problem, steps, target = case
    res = width_sweep(problem, lambda: scripted_generator(steps), tr, reg, target)
    assert [r.width for r in res] == [1, 2, 4, 8, 16]
    assert all(r.reached for r in res)
    for r in res:
        s = r.summary()
        assert s["termination"] == TERMINATED and s["verdicts"] == [[True]] * len(steps)


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(width=0)
    with pytest.raises(ValueError):
        SearchConfig(mode="loose")
    assert TERMINAL
