"""Premise matching and theorem application."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping

from geogen.deduction.state import Fact, State
from geogen.errors import GeoError, InvalidBinding
from geogen.formal.entities import Literal, symmetric_variants
from geogen.formal.expr import Equation
from geogen.formal.registry import EquationPattern, LiteralPattern, Registry, TheoremDef

Binding = dict[str, str]


def binding_text(binding: Mapping[str, str]) -> str:
    return ",".join(f"{k}={binding[k]}" for k in sorted(binding))


def parse_binding(text: str) -> Binding:
    if not text:
        return {}
    return dict(item.split("=", 1) for item in text.split(","))


def _arg_orders(lit: Literal, commutative: bool) -> list[tuple]:
    if commutative and len(lit.args) == 2 and lit.args[0] != lit.args[1]:
        return [lit.args, lit.args[::-1]]
    return [lit.args]


def _unify(pat: LiteralPattern, args, reflect: bool, binding: Binding, injective: bool) -> Iterator[Binding]:
    def rec(i: int, b: Binding) -> Iterator[Binding]:
        if i == len(args):
            yield b
            return
        ent = args[i]
        toks = pat.args[i]
        if len(toks) != len(ent.points):
            return
        for pts in symmetric_variants(ent.kind, ent.points, reflect=reflect):
            nb = b
            ok = True
            for tok, pt in zip(toks, pts):
                if not tok.startswith("?"):
                    if tok != pt:
                        ok = False
                        break
                    continue
                cur = nb.get(tok)
                if cur is None:
                    if injective and pt in nb.values():
                        ok = False
                        break
                    if nb is b:
                        nb = dict(b)
                    nb[tok] = pt
                elif cur != pt:
                    ok = False
                    break
            if ok:
                yield from rec(i + 1, nb)

    yield from rec(0, binding)


def algebraic_support(state: State, pat: EquationPattern, binding: Binding) -> list[str] | None:
    """Fact texts establishing an algebraic premise, or None if it fails.

    The premise holds when its canonical equation is a fact, or when all its
    symbols have known values and it is satisfied exactly.
    """
    try:
        eq = pat.instantiate(binding)
    except (GeoError, ValueError):
        return None
    if eq.text in state.equations:
        return [eq.text]
    p = eq.poly()
    if p is None or not p.symbols() <= state.known.keys():
        return None
    sub = p.substitute(state.values())
    if not sub.is_constant() or not sub.constant().is_zero():
        return None
    return sorted({state.known[s][1] for s in p.symbols()})


def instantiate_conclusions(registry: Registry, theorem: TheoremDef, binding: Binding) -> list[Fact]:
    """Conclusions of ``theorem`` under ``binding`` plus construction effects.

    Raises GeoError/ValueError for degenerate instantiations.
    """
    lits = [registry.instantiate(p, binding) for p in theorem.conclusions]
    out: list[Fact] = list(registry.closure(lits))
    seen = {f.text for f in out}
    for ep in theorem.equations:
        eq = ep.instantiate(binding)
        if eq.text not in seen:
            seen.add(eq.text)
            out.append(eq)
    return out


def match_premises(state: State, theorem: TheoremDef, registry: Registry) -> list[Binding]:
    """All bindings satisfying the theorem's premises, sorted by binding text.

    Bindings that are symmetric images of each other (same premise facts,
    same conclusions) describe one application; only the lexicographically
    smallest is kept.
    """
    found: dict[tuple, Binding] = {}
    prems = theorem.premises

    def rec(i: int, b: Binding) -> None:
        if i == len(prems):
            support = []
            for ap in theorem.algebraic:
                sup = algebraic_support(state, ap, b)
                if sup is None:
                    return
                support.extend(sup)
            try:
                concl = instantiate_conclusions(registry, theorem, b)
            except (GeoError, ValueError):
                return
            prem = [registry.instantiate(p, b).text for p in prems]
            key = (tuple(sorted(set(prem + support))), tuple(sorted(f.text for f in concl)))
            old = found.get(key)
            if old is None or binding_text(b) < binding_text(old):
                found[key] = b
            return
        pat = prems[i]
        pred = registry.predicate(pat.predicate)
        for lit in state.by_predicate(pat.predicate):
            for args in _arg_orders(lit, pred.commutative):
                for nb in _unify(pat, args, pred.reflect, b, theorem.injective):
                    rec(i + 1, nb)

    rec(0, {})
    return sorted(found.values(), key=binding_text)


@dataclass
class Application:
    theorem_id: int
    binding: Binding
    premises: list[str]
    conclusions: list[Fact]
    new: list[Fact] = field(default_factory=list)
    duplicates: list[Fact] = field(default_factory=list)


def premise_support(state: State, theorem: TheoremDef, binding: Binding, registry: Registry) -> list[str]:
    """Premise fact texts for ``binding``; raises InvalidBinding if any fails."""
    if set(binding) != set(theorem.variables):
        raise InvalidBinding(f"binding must cover exactly {sorted(theorem.variables)}")
    if theorem.injective and len(set(binding.values())) != len(binding):
        raise InvalidBinding("binding is not injective")
    texts: list[str] = []
    for pat in theorem.premises:
        try:
            lit = registry.instantiate(pat, binding)
        except GeoError as exc:
            raise InvalidBinding(f"premise {pat.text}: {exc}") from exc
        if lit.text not in state.literals:
            raise InvalidBinding(f"premise {lit.text} is not in the state")
        texts.append(lit.text)
    for ap in theorem.algebraic:
        sup = algebraic_support(state, ap, binding)
        if sup is None:
            raise InvalidBinding(f"algebraic premise {ap.text} does not hold")
        texts.extend(t for t in sup if t not in texts)
    return texts


def apply_theorem(
    state: State, theorem: TheoremDef, binding: Binding, registry: Registry, commit: bool = True
) -> Application:
    premises = premise_support(state, theorem, binding, registry)
    try:
        concl = instantiate_conclusions(registry, theorem, binding)
    except (GeoError, ValueError) as exc:
        raise InvalidBinding(f"degenerate conclusion: {exc}") from exc
    app = Application(theorem.id, dict(binding), premises, concl)
    for f in concl:
        (app.duplicates if f in state else app.new).append(f)
    if commit and app.new:
        eid = len(state.edges)
        state.edges.append((theorem.id, binding_text(binding), tuple(premises)))
        for f in app.new:
            state.add(f)
            state.provenance.setdefault(f.text, set()).add(eid)
    return app


def as_equation(fact: Fact) -> Equation | None:
    return fact if isinstance(fact, Equation) else None
