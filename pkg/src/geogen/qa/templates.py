"""Rendering of facts and reasoning steps as text, and the exact inverse.

A step renders as ``Since c1, c2 and c3, by <phrase>, <conclusion>.`` and
parses back to the same condition texts, theorem id and conclusion.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from geogen.deduction.chase import ReasoningStep
from geogen.deduction.state import Fact
from geogen.errors import GeoSyntaxError, MissingTemplate, TranslationFailed
from geogen.formal.entities import Literal
from geogen.formal.expr import Equation
from geogen.formal.registry import Registry

_PLACE = re.compile(r"\{(\d+)(?:\.(\d+))?\}")
_ENTITY = r"((?:[A-Z][0-9]*)+)"
_POINT = r"([A-Z][0-9]*)"
FORBIDDEN = (", ", " and ")


@dataclass(frozen=True)
class PredicateTemplate:
    name: str
    phrase: str
    regex: re.Pattern
    groups: tuple[tuple[int, int | None], ...]  # (arg, point or None) per group

    def render(self, lit: Literal) -> str:
        def sub(m: re.Match) -> str:
            arg = lit.args[int(m.group(1))]
            return arg.text if m.group(2) is None else arg.points[int(m.group(2))]

        return _PLACE.sub(sub, self.phrase)

    def match(self, text: str) -> list[str] | None:
        m = self.regex.fullmatch(text)
        if not m:
            return None
        full: dict[int, str] = {}
        for (arg, pt), val in zip(self.groups, m.groups()):
            if pt is None:
                if full.setdefault(arg, val) != val:
                    return None
        for (arg, pt), val in zip(self.groups, m.groups()):
            if pt is not None:
                pts = re.findall(_POINT, full[arg])
                if pt >= len(pts) or pts[pt] != val:
                    return None
        return [full[i] for i in range(len(full))]


def _compile(name: str, phrase: str) -> PredicateTemplate:
    parts, groups, pos = [], [], 0
    for m in _PLACE.finditer(phrase):
        parts.append(re.escape(phrase[pos:m.start()]))
        pt = None if m.group(2) is None else int(m.group(2))
        groups.append((int(m.group(1)), pt))
        parts.append(_ENTITY if pt is None else _POINT)
        pos = m.end()
    parts.append(re.escape(phrase[pos:]))
    args = {g[0] for g in groups if g[1] is None}
    if args != set(range(len(args))) or {g[0] for g in groups} - args:
        raise GeoSyntaxError(f"template for {name} must use every argument as {{i}}")
    return PredicateTemplate(name, phrase, re.compile("".join(parts)), tuple(groups))


@dataclass
class Templates:
    measures: dict[str, tuple[str, str]]
    predicates: dict[str, PredicateTemplate]
    theorems: dict[int, str]

    def __post_init__(self):
        self._phrase_ids = {p: t for t, p in self.theorems.items()}
        if len(self._phrase_ids) != len(self.theorems):
            raise GeoSyntaxError("theorem phrases must be distinct")
        alts = []
        for kind, (pre, post) in sorted(self.measures.items(), key=lambda kv: (-len(kv[1][0]), kv[0])):
            alts.append(f"(?P<{kind}>{re.escape(pre)}{_ENTITY}{re.escape(post)})")
        self._measure_re = re.compile("|".join(alts))

    # -- expressions --------------------------------------------------------
    def expr_text(self, formal: str) -> str:
        def sub(m: re.Match) -> str:
            kind = m.group(1)
            if kind not in self.measures:
                raise MissingTemplate(f"no template for measure {kind}")
            pre, post = self.measures[kind]
            return pre + m.group(2) + post

        return re.sub(r"([A-Z][A-Za-z]+)\(([A-Z0-9]+)\)", sub, formal)

    def expr_formal(self, text: str) -> str:
        def sub(m: re.Match) -> str:
            kind = m.lastgroup
            return f"{kind}({m.group(m.lastindex + 1)})"

        return self._measure_re.sub(sub, text)

    # -- facts ----------------------------------------------------------------
    def fact_text(self, fact: Fact) -> str:
        if isinstance(fact, Equation):
            lhs, rhs = fact.text.split("=")
            out = f"{self.expr_text(lhs)} = {self.expr_text(rhs)}"
        else:
            tpl = self.predicates.get(fact.predicate)
            if tpl is None:
                raise MissingTemplate(f"no template for predicate {fact.predicate}")
            out = tpl.render(fact)
        if any(f in out for f in FORBIDDEN):
            raise MissingTemplate(f"rendered text {out!r} contains a separator")
        return out

    def parse_fact(self, text: str, registry: Registry) -> Fact:
        text = text.strip()
        if " = " in text:
            lhs, rhs = text.split(" = ", 1)
            try:
                return Equation.parse(f"{self.expr_formal(lhs)}={self.expr_formal(rhs)}")
            except Exception as e:
                raise TranslationFailed(f"cannot read equation {text!r}: {e}") from e
        hits = []
        for name, tpl in self.predicates.items():
            args = tpl.match(text)
            if args is not None:
                hits.append((name, args))
        if len(hits) != 1:
            why = "no template matches" if not hits else "ambiguous"
            raise TranslationFailed(f"{why}: {text!r}")
        name, args = hits[0]
        try:
            return registry.make_literal(name, [re.findall(_POINT, a) for a in args])
        except Exception as e:
            raise TranslationFailed(f"bad literal in {text!r}: {e}") from e

    # -- steps ---------------------------------------------------------------
    def theorem_phrase(self, tid: int) -> str:
        if tid not in self.theorems:
            raise MissingTemplate(f"no template for theorem {tid}")
        return self.theorems[tid]

    def theorem_id(self, phrase: str) -> int:
        if phrase not in self._phrase_ids:
            raise TranslationFailed(f"unknown theorem phrase {phrase!r}")
        return self._phrase_ids[phrase]

    def step_text(self, step: ReasoningStep) -> str:
        conds = [self.fact_text(c) for c in step.conditions]
        phrase = self.theorem_phrase(step.theorem_id)
        concl = self.fact_text(step.conclusion)
        if not conds:
            return f"By {phrase}, {concl}."
        lead = conds[0] if len(conds) == 1 else ", ".join(conds[:-1]) + " and " + conds[-1]
        return f"Since {lead}, by {phrase}, {concl}."

    def parse_step(self, text: str, registry: Registry) -> tuple[list[Fact], int, Fact]:
        """Inverse of :meth:`step_text`: ``(conditions, theorem id, conclusion)``."""
        m = re.fullmatch(r"(?:Since (?P<c>.+?), by|By) (?P<t>[^,]+), (?P<k>[^,]+)\.", text.strip())
        if not m:
            raise TranslationFailed(f"step does not fit the frame: {text!r}")
        conds: list[str] = []
        if m.group("c"):
            head, sep, last = m.group("c").rpartition(" and ")
            conds = (head.split(", ") + [last]) if sep else [last]
        tid = self.theorem_id(m.group("t"))
        return [self.parse_fact(c, registry) for c in conds], tid, self.parse_fact(m.group("k"), registry)


def load_templates(text: str) -> Templates:
    measures, preds, thms = {}, {}, {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = re.fullmatch(r"(measure|predicate|theorem)\s+(\w+):\s*(.+)", line)
        if not m:
            raise GeoSyntaxError(f"bad template line: {line!r}", n)
        kind, name, phrase = m.groups()
        if any(f in phrase for f in FORBIDDEN):
            raise GeoSyntaxError(f"template may not contain ', ' or ' and ': {line!r}", n)
        if kind == "measure":
            pre, sep, post = phrase.partition("{0}")
            if not sep:
                raise GeoSyntaxError(f"measure template needs {{0}}: {line!r}", n)
            measures[name] = (pre, post)
        elif kind == "predicate":
            preds[name] = _compile(name, phrase)
        else:
            thms[int(name)] = phrase
    return Templates(measures, preds, thms)


@lru_cache(maxsize=1)
def default_templates() -> Templates:
    text = resources.files("geogen.data").joinpath("templates.txt").read_text(encoding="utf-8")
    return load_templates(text)
