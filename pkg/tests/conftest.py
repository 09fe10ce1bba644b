import numpy as np
import pytest

from geogen.formal.registry import core_registry
from geogen.plotter.diagram import SynthConfig
from geogen.plotter.synth import synthesize
from geogen.qa.templates import default_templates
from geogen.targets import prepare_problem


@pytest.fixture(scope="session")
def reg():
    return core_registry()


@pytest.fixture(scope="session")
def templates():
    return default_templates()


def problems(reg, seed, count):
    """Synthesized problems (diagram + givens + chase) for seed indices."""
    out = []
    i = 0
    while len(out) < count:
        try:
            d = synthesize(seed, i, reg, SynthConfig())
        except Exception:
            i += 1
            continue
        out.append(prepare_problem(d, reg, np.random.default_rng([seed, i, 1])))
        i += 1
    return out


@pytest.fixture(scope="session")
def sample_problems(reg):
    return problems(reg, 11, 12)
