"""Target selection, reasoning paths and numeric givens."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from geogen.deduction.chase import (
    ChaseLimits,
    DeductionGraph,
    ReasoningStep,
    forward_chase,
    linearize,
    traceback,
)
from geogen.deduction.solver import solve_equations
from geogen.deduction.state import Fact, parse_fact
from geogen.errors import GeoError, InconsistentSystem, LimitExceeded, NoEligibleTarget
from geogen.formal.entities import Literal
from geogen.formal.expr import Equation, Symbol, value_equation
from geogen.formal.numbers import Radical
from geogen.formal.registry import Registry
from geogen.plotter.diagram import Diagram
from geogen.plotter.geometry import literal_holds, measure_value

STRUCTURAL = frozenset({"Line", "Collinear"})
NUMERIC, RELATION = "numeric", "relation"


@dataclass(frozen=True)
class TargetFilter:
    min_depth: int = 1
    max_depth: int = 6
    max_steps: int = 12
    kinds: frozenset[str] = frozenset({NUMERIC, RELATION})
    count: tuple[int, int] = (1, 3)

    def __post_init__(self):
        if self.min_depth > self.max_depth:
            raise ValueError("min_depth must not exceed max_depth")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.count[0] > self.count[1] or self.count[0] < 0:
            raise ValueError("count must be a non-empty range")


def fact_kind(fact: Fact) -> str | None:
    if isinstance(fact, Equation):
        v = fact.value()
        return NUMERIC if v is not None and v[0].is_measure else None
    return None if fact.predicate in STRUCTURAL else RELATION


@dataclass
class TargetScore:
    fact: str
    depth: int
    step_count: int
    kind: str | None


def score_targets(graph: DeductionGraph, registry: Registry) -> list[TargetScore]:
    """Depth and linearised step count of every derived node."""
    out = []
    for n in graph.nodes:
        if n.layer == 0:
            continue
        steps = linearize(traceback(graph, n.text), registry)
        out.append(TargetScore(n.text, n.layer, len(steps), fact_kind(n.fact)))
    return out


def select_targets(graph: DeductionGraph, flt: TargetFilter, rng: np.random.Generator,
                   registry: Registry) -> list[str]:
    """Distinct targets drawn uniformly from the eligible nodes."""
    elig = sorted(
        s.fact for s in score_targets(graph, registry)
        if s.kind in flt.kinds and flt.min_depth <= s.depth <= flt.max_depth and 1 <= s.step_count <= flt.max_steps
    )
    if not elig:
        raise NoEligibleTarget("no node satisfies the target filter")
    lo, hi = flt.count
    k = min(int(rng.integers(lo, hi + 1)), len(elig))
    idx = rng.choice(len(elig), size=k, replace=False)
    return [elig[int(i)] for i in idx]


@dataclass
class ReasoningPath:
    givens: list[Fact]
    steps: list[ReasoningStep]
    target: Fact
    answer: str
    depth: int
    value: Radical | None = None
    theorem_sequence: list[int] = field(default_factory=list)

    @property
    def signature(self) -> str:
        return "-".join(str(t) for t in self.theorem_sequence)

    @property
    def kind(self) -> str | None:
        return fact_kind(self.target)


class PathMismatch(GeoError):
    code = "PathMismatch"


def build_path(graph: DeductionGraph, target: Fact | str, registry: Registry) -> ReasoningPath:
    sub = traceback(graph, target)
    steps = linearize(sub, registry)
    node = graph.node(target)
    givens = [n.fact for n in sub.nodes if n.layer == 0]
    givens.sort(key=lambda f: (isinstance(f, Equation), f.text))
    path = ReasoningPath(givens, steps, node.fact, node.text, node.layer,
                         theorem_sequence=[s.theorem_id for s in steps])
    if fact_kind(node.fact) == NUMERIC:
        sym, expected = node.fact.value()  # type: ignore[union-attr, misc]
        path.value = resolve_answer(path, sym)
        if path.value != expected:
            raise PathMismatch(f"re-solved {sym.text}={path.value} but the chase derived {expected.text()}")
        path.answer = path.value.text()
    return path


def resolve_answer(path: ReasoningPath, sym: Symbol) -> Radical | None:
    """Solve for ``sym`` from the path alone: given equations plus the
    equations concluded by theorem steps (solver steps are recomputed)."""
    eqs = [f for f in path.givens if isinstance(f, Equation)]
    eqs += [s.conclusion for s in path.steps if not s.is_algebra and isinstance(s.conclusion, Equation)]
    res = solve_equations(eqs, {})
    known = {}
    for e in eqs:
        v = e.value()
        if v is not None:
            known[v[0]] = v[1]
    known.update(res.new_known)
    return known.get(sym)


# -- numeric givens ----------------------------------------------------------

def _value_radical(x: float, exact: bool) -> Radical:
    from fractions import Fraction

    r = round(x)
    if abs(x - r) <= 1e-6:
        return Radical.of(int(r))
    if exact:
        raise ValueError("value is not an integer")
    return Radical.of(Fraction(round(x * 10), 10))


def scaled(diagram: Diagram, factor: float) -> Diagram:
    d = Diagram.from_dict(diagram.to_dict())
    d.points = {k: (x * factor, y * factor) for k, (x, y) in d.points.items()}
    return d


def given_equations(diagram: Diagram, symbols: list[Symbol], scale_to: int | None = None) -> tuple[Diagram, list[Equation]]:
    """Read given values off the diagram.

    The first length symbol is made an integer by rescaling the whole
    diagram (to ``scale_to`` when given, else to its rounded length).
    Other values are integers when within 1e-6 of one, else one decimal.
    """
    lengths = [s for s in symbols if s.kind == "LengthOfLine"]
    if lengths:
        cur = measure_value(lengths[0], diagram.points)
        target = scale_to if scale_to is not None else max(1, round(cur))
        diagram = scaled(diagram, target / cur)
    eqs = []
    for s in symbols:
        v = _value_radical(measure_value(s, diagram.points), exact=False)
        eqs.append(value_equation(s, v))
    diagram.givens = [e.text for e in eqs]
    return diagram, eqs


def _measure_symbols(graph: DeductionGraph) -> list[Symbol]:
    syms: set[Symbol] = set()
    for n in graph.nodes:
        if isinstance(n.fact, Equation):
            syms |= {s for s in n.fact.symbols() if s.is_measure}
    return sorted(syms, key=lambda s: s.text)


def choose_givens(graph0: DeductionGraph, rng: np.random.Generator, max_givens: int = 3) -> list[Symbol]:
    """Measures that the given-free chase leaves undetermined, picked one at
    a time so no given is implied by the earlier ones."""
    eqs = [n.fact for n in graph0.nodes if isinstance(n.fact, Equation)]
    cands = _measure_symbols(graph0)
    base = solve_equations(eqs, {}).new_known
    for e in eqs:
        v = e.value()
        if v is not None:
            base[v[0]] = v[1]
    cands = [s for s in cands if s not in base]
    # lengths first so the diagram scale is fixed by a length
    order = [cands[int(i)] for i in rng.permutation(len(cands))]
    order.sort(key=lambda s: s.kind != "LengthOfLine")
    n = int(rng.integers(1, max_givens + 1))
    chosen: list[Symbol] = []
    known: dict[Symbol, Radical] = dict(base)
    for s in order:
        if len(chosen) >= n:
            break
        if s in known:
            continue
        chosen.append(s)
        known[s] = Radical.of(1)  # placeholder: only determinacy matters here
        try:
            known.update(solve_equations(eqs, known).new_known)
        except (InconsistentSystem, GeoError):
            pass
    return chosen


@dataclass
class Problem:
    diagram: Diagram
    initial: list[Fact]
    graph: DeductionGraph


def prepare_problem(diagram: Diagram, registry: Registry, rng: np.random.Generator,
                    limits: ChaseLimits | None = None, max_givens: int = 3) -> Problem:
    """Attach numeric givens to a diagram and run the forward chase.

    Givens are dropped (fewer, then none) if the chase becomes inconsistent
    or derives a literal that the coordinates do not realise.
    """
    lits = [registry.parse_literal(t) for t in diagram.initial]
    graph0 = forward_chase(lits, registry, limits)
    syms = choose_givens(graph0, rng, max_givens)
    while True:
        d, eqs = given_equations(diagram, syms)
        facts: list[Fact] = list(lits) + list(eqs)
        try:
            g = forward_chase(facts, registry, limits)
            if _realised(g, d, registry):
                return Problem(d, facts, g)
        except (InconsistentSystem, LimitExceeded):
            pass
        if not syms:
            return Problem(diagram, list(lits), graph0)
        syms = syms[:-1]


def _realised(g: DeductionGraph, d: Diagram, registry: Registry) -> bool:
    for n in g.nodes:
        if n.layer > 0 and isinstance(n.fact, Literal) and not literal_holds(n.fact, registry, d.points):
            return False
    return True


def facts_from_texts(texts: list[str], registry: Registry) -> list[Fact]:
    return [parse_fact(t, registry) for t in texts]
