"""Step-level tree search: generate K candidates, verify, commit one valid step."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

from geogen.deduction.state import Fact, State
from geogen.errors import GatewayError, GeneratorError, GeoError
from geogen.formal.registry import Registry
from geogen.gateway import TERMINAL, CompletionRequest
from geogen.plotter.diagram import Diagram
from geogen.verifier.check import (
    FAST,
    STRICT,
    Figure,
    StepTriple,
    Translator,
    VerifyResult,
    commit,
    verify,
)

TERMINATED = "terminal"
NO_VALID = "no_valid_candidates"
MAX_ITER = "max_iterations"
GEN_ERROR = "generator_error"


@dataclass(frozen=True)
class SearchConfig:
    width: int = 4
    max_iterations: int = 32
    mode: str = STRICT
    seed: int = 0

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("width must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.mode not in (STRICT, FAST):
            raise ValueError(f"mode must be {STRICT} or {FAST}")


@dataclass
class SearchProblem:
    prompt: str
    givens: list[Fact]
    diagram: Diagram | None = None

    def figure(self) -> Figure:
        if self.diagram is not None:
            return Figure.from_diagram(self.diagram)
        return Figure.from_facts(self.givens)


class Generator(Protocol):
    def __call__(self, prompt: str, history: Sequence[str], k: int) -> list[str] | None:
        """Up to ``k`` candidate steps, or None for the terminal marker."""


@dataclass
class GatewayGenerator:
    """Candidates are the non-empty lines of one completion."""

    gateway: object
    system: str = "Propose the next reasoning step of the geometry solution, one candidate per line."

    def __call__(self, prompt: str, history: Sequence[str], k: int) -> list[str] | None:
        user = "\n".join([prompt, *history])
        try:
            resp = self.gateway.complete(CompletionRequest(user, self.system))  # type: ignore[attr-defined]
        except GatewayError as e:
            raise GeneratorError(f"gateway failed: {e}") from e
        if resp.text.strip() == TERMINAL:
            return None
        lines = [ln for ln in resp.text.splitlines() if ln.strip()]
        return lines[:k] or None


@dataclass
class Candidate:
    text: str
    triple: StepTriple | None
    verdict: VerifyResult

    def to_dict(self, registry: Registry) -> dict:
        return {"text": self.text, "triple": self.triple.to_dict(registry) if self.triple else None,
                "verdict": self.verdict.to_dict()}


@dataclass
class History:
    accepted: list[Candidate] = field(default_factory=list)
    iterations: list[list[Candidate]] = field(default_factory=list)
    termination: str = ""
    error: str | None = None

    def steps(self) -> list[str]:
        return [c.text for c in self.accepted]

    def to_dict(self, registry: Registry) -> dict:
        return {
            "accepted": [c.to_dict(registry) for c in self.accepted],
            "iterations": [{"index": i, "candidates": [c.to_dict(registry) for c in it]}
                           for i, it in enumerate(self.iterations)],
            "termination": self.termination,
            "error": self.error,
        }

    def to_json(self, registry: Registry) -> str:
        return json.dumps(self.to_dict(registry), sort_keys=True, ensure_ascii=False)


def _assess(text: str, translator: Translator, mode: str, state: State, fig: Figure,
            registry: Registry) -> Candidate:
    try:
        triple = translator.translate(text)
    except GeoError as e:
        return Candidate(text, None, VerifyResult(False, mode, e.code, str(e)))
    try:
        verdict = verify(mode, state, fig, triple, registry)
    except GeoError as e:  # defensive: a verifier crash never admits a step
        verdict = VerifyResult(False, mode, e.code, str(e))
    return Candidate(text, triple, verdict)


def tree_search(problem: SearchProblem, generator: Generator, translator: Translator,
                registry: Registry, config: SearchConfig | None = None) -> History:
    cfg = config or SearchConfig()
    rng = random.Random(cfg.seed)
    state = State.from_facts(problem.givens)
    fig = problem.figure()
    hist = History()
    for _ in range(cfg.max_iterations):
        try:
            cands = generator(problem.prompt, hist.steps(), cfg.width)
        except Exception as e:  # any generator failure ends the search, keeping the history
            code = e.code if isinstance(e, GeoError) else type(e).__name__
            hist.termination, hist.error = GEN_ERROR, f"{code}: {e}"
            return hist
        if cands is None:
            hist.termination = TERMINATED
            return hist
        logged = [_assess(t, translator, cfg.mode, state, fig, registry) for t in cands[:cfg.width]]
        hist.iterations.append(logged)
        valid = [c for c in logged if c.verdict.valid]
        if not valid:
            hist.termination = NO_VALID
            return hist
        chosen = valid[rng.randrange(len(valid))]
        assert chosen.triple is not None
        commit(state, chosen.triple)
        hist.accepted.append(chosen)
    hist.termination = MAX_ITER
    return hist


@dataclass
class SweepResult:
    width: int
    history: History
    reached: bool

    def summary(self) -> dict:
        verdicts = [[c.verdict.valid for c in it] for it in self.history.iterations]
        return {"width": self.width, "accepted": len(self.history.accepted), "reached": self.reached,
                "termination": self.history.termination, "verdicts": verdicts}


def width_sweep(problem: SearchProblem, make_generator: Callable[[], Generator], translator: Translator,
                registry: Registry, target: Fact | None = None, widths: Sequence[int] = (1, 2, 4, 8, 16),
                mode: str = STRICT, seed: int = 0, max_iterations: int = 32) -> list[SweepResult]:
    """Run the search once per width with a fresh generator each time."""
    out = []
    for k in widths:
        hist = tree_search(problem, make_generator(), translator, registry,
                           SearchConfig(k, max_iterations, mode, seed))
        reached = target is not None and any(
            c.triple is not None and c.triple.conclusion.text == target.text for c in hist.accepted)
        out.append(SweepResult(k, hist, reached))
    return out
