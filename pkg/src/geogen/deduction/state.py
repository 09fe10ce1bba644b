"""Deduction state: literals, equations and known measure values."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union

from geogen.formal.entities import Literal
from geogen.formal.expr import Equation, Symbol
from geogen.formal.numbers import Radical
from geogen.formal.registry import Registry

Fact = Union[Literal, Equation]


def is_equation(fact: Fact) -> bool:
    return isinstance(fact, Equation)


def parse_fact(text: str, registry: Registry) -> Fact:
    if "=" in text:
        return Equation.parse(text)
    return registry.parse_literal(text)


@dataclass
class State:
    literals: dict[str, Literal] = field(default_factory=dict)
    equations: dict[str, Equation] = field(default_factory=dict)
    # symbol -> (value, text of the value fact that fixed it)
    known: dict[Symbol, tuple[Radical, str]] = field(default_factory=dict)
    provenance: dict[str, set[int]] = field(default_factory=dict)
    # hyperedges recorded by committed theorem applications:
    # (theorem id, binding text, premise texts)
    edges: list[tuple[int, str, tuple[str, ...]]] = field(default_factory=list)
    _by_pred: dict[str, list[Literal]] = field(default_factory=dict, repr=False)

    @classmethod
    def from_facts(cls, facts: Iterable[Fact]) -> "State":
        st = cls()
        for f in facts:
            st.add(f)
        return st

    def __contains__(self, fact: Fact | str) -> bool:
        t = fact if isinstance(fact, str) else fact.text
        return t in self.literals or t in self.equations

    def add(self, fact: Fact) -> bool:
        """Add a fact; returns False when it was already present."""
        if fact in self:
            return False
        if isinstance(fact, Equation):
            self.equations[fact.text] = fact
            v = fact.value()
            if v is not None and v[0] not in self.known:
                self.known[v[0]] = (v[1], fact.text)
        else:
            self.literals[fact.text] = fact
            bucket = self._by_pred.setdefault(fact.predicate, [])
            bucket.append(fact)
            bucket.sort(key=lambda lit: lit.text)
        return True

    def by_predicate(self, name: str) -> list[Literal]:
        return self._by_pred.get(name, [])

    def values(self) -> dict[Symbol, Radical]:
        return {s: v for s, (v, _) in self.known.items()}

    def facts(self) -> list[Fact]:
        return [self.literals[k] for k in sorted(self.literals)] + [self.equations[k] for k in sorted(self.equations)]

    def fact_texts(self) -> set[str]:
        return set(self.literals) | set(self.equations)

    def copy(self) -> "State":
        st = State(
            dict(self.literals), dict(self.equations), dict(self.known),
            {k: set(v) for k, v in self.provenance.items()}, list(self.edges),
        )
        st._by_pred = {k: list(v) for k, v in self._by_pred.items()}
        return st
