"""Step translation and strict / fast verification."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Protocol

from geogen.deduction.chase import ReasoningStep
from geogen.deduction.matching import (
    binding_text,
    instantiate_conclusions,
    match_premises,
    parse_binding,
    premise_support,
)
from geogen.deduction.solver import SOLVER_NAMES, solve_equations
from geogen.deduction.state import Fact, State, parse_fact
from geogen.errors import GatewayError, GeoError, InvalidBinding, TranslationFailed
from geogen.formal.entities import POINT_RE, Entity, Literal, make_entity
from geogen.formal.expr import Equation
from geogen.formal.registry import Registry
from geogen.plotter.diagram import Diagram
from geogen.plotter.geometry import point_segment_distance
from geogen.qa.templates import Templates

STRICT, FAST = "strict", "fast"


@dataclass(frozen=True)
class StepTriple:
    conditions: tuple[Fact, ...]
    theorem_id: int
    conclusion: Fact
    binding: str | None = None  # recovered or supplied; None when unknown

    def key(self) -> tuple:
        return (tuple(c.text for c in self.conditions), self.theorem_id, self.binding, self.conclusion.text)

    def to_dict(self, registry: Registry | None = None) -> dict:
        th: dict = {"id": self.theorem_id, "binding": self.binding}
        if registry is not None:
            th["name"] = registry.theorem_name(self.theorem_id)
        return {"conditions": [c.text for c in self.conditions], "theorem": th,
                "conclusion": self.conclusion.text}

    @classmethod
    def from_step(cls, step: ReasoningStep) -> "StepTriple":
        return cls(tuple(step.conditions), step.theorem_id, step.conclusion, step.binding)


@dataclass(frozen=True)
class VerifyResult:
    valid: bool
    mode: str
    code: str = ""
    message: str = ""
    entity: str | None = None

    def to_dict(self) -> dict:
        out = {"valid": self.valid, "mode": self.mode, "code": self.code, "message": self.message}
        if self.entity is not None:
            out["entity"] = self.entity
        return out


def _ok(mode: str) -> VerifyResult:
    return VerifyResult(True, mode)


# -- translation ------------------------------------------------------------

class Translator(Protocol):
    def translate(self, text: str) -> StepTriple: ...


def infer_binding(conditions: Iterable[Fact], theorem_id: int, conclusion: Fact, registry: Registry) -> str | None:
    """Smallest binding under which exactly ``conditions`` support the theorem
    and it concludes ``conclusion``; ``""`` for solver steps."""
    if theorem_id in SOLVER_NAMES:
        return ""
    try:
        thm = registry.theorem(theorem_id)
    except GeoError:
        return None
    conds = list(conditions)
    state = State.from_facts(conds)
    want = {c.text for c in conds}
    for b in match_premises(state, thm, registry):
        try:
            sup = premise_support(state, thm, b, registry)
            concl = instantiate_conclusions(registry, thm, b)
        except (GeoError, ValueError):
            continue
        if set(sup) == want and any(f.text == conclusion.text for f in concl):
            return binding_text(b)
    return None


@dataclass
class RuleTranslator:
    """Inverse of the shipped templates."""

    templates: Templates
    registry: Registry

    def translate(self, text: str) -> StepTriple:
        conds, tid, concl = self.templates.parse_step(text, self.registry)
        return StepTriple(tuple(conds), tid, concl, infer_binding(conds, tid, concl, self.registry))


@dataclass
class GatewayTranslator:
    """Asks a chat model for ``{"conditions": [...], "theorem": id|name,
    "conclusion": ...}`` and canonicalises the reply."""

    gateway: object
    registry: Registry
    system: str = ("Translate the geometry reasoning step into JSON with keys conditions (list of "
                   "formal facts), theorem (id or name) and conclusion (formal fact). Reply with JSON only.")

    def translate(self, text: str) -> StepTriple:
        from geogen.gateway import CompletionRequest

        try:
            resp = self.gateway.complete(CompletionRequest(text, self.system))  # type: ignore[attr-defined]
        except GatewayError as e:
            raise TranslationFailed(f"gateway: {e}") from e
        try:
            data = json.loads(resp.text)
            conds = tuple(parse_fact(c, self.registry) for c in data["conditions"])
            th = data["theorem"]
            tid = int(th) if str(th).isdigit() else self.registry.theorem(str(th)).id
            concl = parse_fact(data["conclusion"], self.registry)
        except (ValueError, KeyError, TypeError, GeoError) as e:
            raise TranslationFailed(f"unusable translation: {e}") from e
        return StepTriple(conds, tid, concl, infer_binding(conds, tid, concl, self.registry))


def translate_step(text: str, translator: Translator) -> StepTriple:
    return translator.translate(text)


# -- strict mode ------------------------------------------------------------

def verify_strict(state: State, triple: StepTriple, registry: Registry) -> VerifyResult:
    for c in triple.conditions:
        if c not in state:
            return VerifyResult(False, STRICT, "MissingCondition", f"{c.text} is not established", c.text)
    tid = triple.theorem_id
    if tid in SOLVER_NAMES:
        return _verify_algebra(triple)
    try:
        thm = registry.theorem(tid)
    except GeoError:
        return VerifyResult(False, STRICT, "UnknownTheorem", f"no theorem {tid}")
    local = State.from_facts(triple.conditions)
    if triple.binding:
        bindings = [parse_binding(triple.binding)]
    else:
        bindings = match_premises(local, thm, registry)
    fired = False
    for b in bindings:
        try:
            premise_support(local, thm, b, registry)
            concl = instantiate_conclusions(registry, thm, b)
        except (InvalidBinding, GeoError, ValueError):
            continue
        fired = True
        if any(f.text == triple.conclusion.text for f in concl):
            return _ok(STRICT)
    if not fired:
        return VerifyResult(False, STRICT, "BindingFailure",
                            f"the conditions do not satisfy the premises of {thm.name}")
    return VerifyResult(False, STRICT, "ConclusionMismatch",
                        f"{thm.name} does not conclude {triple.conclusion.text} from these conditions")


def _verify_algebra(triple: StepTriple) -> VerifyResult:
    concl = triple.conclusion
    if not isinstance(concl, Equation):
        return VerifyResult(False, STRICT, "ConclusionMismatch", "solver steps conclude equations")
    eqs = [c for c in triple.conditions if isinstance(c, Equation)]
    if len(eqs) != len(triple.conditions) or not eqs:
        return VerifyResult(False, STRICT, "BindingFailure", "solver steps take equations only")
    try:
        res = solve_equations(eqs, {})
    except GeoError as e:
        return VerifyResult(False, STRICT, "BindingFailure", f"conditions are inconsistent: {e}")
    known = dict(res.new_known)
    for e in eqs:
        v = e.value()
        if v is not None:
            known.setdefault(v[0], v[1])
    v = concl.value()
    if v is not None and known.get(v[0]) == v[1]:
        return _ok(STRICT)
    p = concl.poly()
    if p is not None and p.symbols() <= known.keys():
        sub = p.substitute(known)
        if sub.is_constant() and sub.constant().is_zero():
            return _ok(STRICT)
    return VerifyResult(False, STRICT, "ConclusionMismatch", f"{concl.text} does not follow from the equations")


def commit(state: State, triple: StepTriple) -> None:
    state.add(triple.conclusion)


# -- fast mode ----------------------------------------------------------------

@dataclass
class Figure:
    """Points and drawn segments (including sub-segments of drawn segments)."""

    points: set[str]
    segments: set[str] = field(default_factory=set)

    @classmethod
    def from_diagram(cls, d: Diagram, tol: float = 1e-6) -> "Figure":
        fig = cls(set(d.points))
        scale = max(1.0, max((abs(c) for p in d.points.values() for c in p), default=1.0))
        for a, b in d.segments:
            on = [p for p, xy in d.points.items()
                  if p in (a, b) or _on_segment(xy, d.points[a], d.points[b], tol * scale)]
            fig._add_chain(on)
        return fig

    @classmethod
    def from_facts(cls, facts: Iterable[Fact]) -> "Figure":
        facts = list(facts)
        pts: set[str] = set()
        lines: list[tuple[str, str]] = []
        coll: list[tuple[str, ...]] = []
        for f in facts:
            if isinstance(f, Literal):
                pts |= f.points()
                if f.predicate == "Line":
                    lines.append(f.args[0].points)  # type: ignore[arg-type]
                elif f.predicate == "Collinear":
                    coll.append(f.args[0].points)
        fig = cls(pts)
        for a, b in lines:
            # a collinear triple sharing two points with the line lies on it
            chain = {a, b}
            grew = True
            while grew:
                grew = False
                for trip in coll:
                    if len(chain & set(trip)) >= 2 and not chain >= set(trip):
                        chain |= set(trip)
                        grew = True
            fig._add_chain(sorted(chain))
        return fig

    def _add_chain(self, pts: list[str]) -> None:
        for i, p in enumerate(pts):
            for q in pts[i + 1:]:
                self.segments.add(make_entity("segment", (p, q)).text)

    def has_segment(self, seg: Entity) -> bool:
        return seg.text in self.segments


def _on_segment(p, a, b, tol: float) -> bool:
    d, t = point_segment_distance(p, a, b)
    return d <= tol and -1e-9 <= t <= 1 + 1e-9


def _entities(fact: Fact, registry: Registry) -> list[Entity]:
    if isinstance(fact, Literal):
        return list(fact.args)
    out = []
    for s in sorted(fact.symbols(), key=lambda s: s.text):
        if s.is_measure:
            kind = registry.predicate(s.kind).slots[0].kind
            out.append(Entity(kind, tuple(s.args)))
    return out


def _missing_points(text: str, fig: Figure) -> list[str]:
    return [p for p in POINT_RE.findall(text) if p not in fig.points]


def verify_fast(figure: Figure | Diagram | State, triple: StepTriple, registry: Registry) -> VerifyResult:
    """Only checks that every entity the conclusion mentions is in the figure."""
    if isinstance(figure, Diagram):
        figure = Figure.from_diagram(figure)
    elif isinstance(figure, State):
        figure = Figure.from_facts(figure.facts())
    for ent in _entities(triple.conclusion, registry):
        miss = _missing_points(ent.text, figure)
        if miss:
            return VerifyResult(False, FAST, "MissingEntity",
                                f"{ent.kind} {ent.text}: point {miss[0]} is not in the figure", ent.text)
        for seg in ent.segments():
            if not figure.has_segment(seg):
                return VerifyResult(False, FAST, "MissingEntity",
                                    f"segment {seg.text} of {ent.kind} {ent.text} is not drawn", seg.text)
    return _ok(FAST)


def verify(mode: str, state: State, figure: Figure, triple: StepTriple, registry: Registry) -> VerifyResult:
    if mode == STRICT:
        return verify_strict(state, triple, registry)
    if mode == FAST:
        return verify_fast(figure, triple, registry)
    raise ValueError(f"unknown mode {mode!r}")
