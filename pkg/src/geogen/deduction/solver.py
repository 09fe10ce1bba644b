"""Exact equation solving with one replayable step per solved symbol.

Three step kinds are produced, each reported under a reserved pseudo-theorem
id so solver steps sit in the same hypergraph as theorem applications:

* substitution (1000): plug known values into one equation, leaving one
  linear unknown;
* isolation (1001): one equation reduces to ``a*x^2 + c = 0``; the positive
  root is taken (every measure is non-negative);
* elimination (1002): Gauss-Jordan over the linear rows of several
  equations.

Every round only reads the values known at the start of the round, so a
step never depends on another step of the same round.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from geogen.errors import InconsistentSystem, NotExact
from geogen.formal.expr import Equation, Poly, Symbol, value_equation
from geogen.formal.numbers import Radical

SUBSTITUTION, ISOLATION, ELIMINATION = 1000, 1001, 1002
METHOD_IDS = {"substitution": SUBSTITUTION, "isolation": ISOLATION, "elimination": ELIMINATION}
SOLVER_NAMES = {v: k for k, v in METHOD_IDS.items()}


@dataclass(frozen=True)
class SolveStep:
    method: str
    symbol: Symbol
    value: Radical
    equations: tuple[str, ...]
    substituted: tuple[Symbol, ...] = ()

    @property
    def theorem_id(self) -> int:
        return METHOD_IDS[self.method]

    @property
    def conclusion(self) -> Equation:
        return value_equation(self.symbol, self.value)


@dataclass
class SolveResult:
    new_known: dict[Symbol, Radical] = field(default_factory=dict)
    steps: list[SolveStep] = field(default_factory=list)


def solve_equations(
    equations: Iterable[Equation],
    known: Mapping[Symbol, Radical],
    max_rounds: int | None = None,
) -> SolveResult:
    """Derive every value reachable from ``equations`` and ``known``.

    Value facts among ``equations`` count as known without a step.  Raises
    :class:`InconsistentSystem` when an equation whose symbols are all known
    does not hold exactly.
    """
    eqs = sorted({e.text: e for e in equations}.values(), key=lambda e: e.text)
    known = dict(known)
    for e in eqs:
        v = e.value()
        if v is not None and v[0] not in known:
            known[v[0]] = v[1]
    polys = [(e, p) for e in eqs if (p := e.poly()) is not None]
    out = SolveResult()
    rounds = 0
    while max_rounds is None or rounds < max_rounds:
        rounds += 1
        found = _round(polys, known)
        if not found:
            break
        for st in found:
            known[st.symbol] = st.value
            out.new_known[st.symbol] = st.value
            out.steps.append(st)
    if max_rounds is None or rounds < max_rounds:
        _check_residuals(polys, known)
    return out


def _check_residuals(polys, known) -> None:
    for e, p in polys:
        sub = p.substitute(known)
        if sub.is_constant() and not sub.constant().is_zero():
            raise InconsistentSystem(f"{e.text} does not hold (residual {sub.constant().text()})")


def _round(polys: list[tuple[Equation, Poly]], known: dict[Symbol, Radical]) -> list[SolveStep]:
    steps: dict[Symbol, SolveStep] = {}
    rows = []
    for e, p in polys:
        sub = p.substitute(known)
        used = tuple(sorted(p.symbols() & known.keys()))
        if sub.is_constant():
            if not sub.constant().is_zero():
                raise InconsistentSystem(f"{e.text} does not hold (residual {sub.constant().text()})")
            continue
        unknowns = sub.symbols()
        if len(unknowns) == 1:
            (s,) = unknowns
            if s not in steps:
                st = _single(e, sub, s, used)
                if st is not None:
                    steps[s] = st
            continue
        if sub.degree() == 1 and all(c.rational() is not None for m, c in sub.terms.items() if m):
            rows.append((e.text, sub, used))
    if len(rows) >= 2:
        for st in _eliminate(rows, known):
            steps.setdefault(st.symbol, st)
    return [steps[s] for s in sorted(steps)]


def _single(e: Equation, sub: Poly, s: Symbol, used: tuple[Symbol, ...]) -> SolveStep | None:
    lin = sub.terms.get(((s, 1),))
    const = sub.constant()
    monos = {m for m in sub.terms if m}
    try:
        if monos == {((s, 1),)}:
            return SolveStep("substitution", s, -const / lin, (e.text,), used)
        if monos == {((s, 2),)}:
            sq = -const / sub.terms[((s, 2),)]
            if sq.rational() is None or sq.rational() <= 0:
                return None
            return SolveStep("isolation", s, Radical.sqrt_of(sq.rational()), (e.text,), used)
    except (NotExact, ZeroDivisionError):
        return None
    return None


def _rref(rows):
    """Gauss-Jordan; rows are (coef dict, constant, source set)."""
    syms = sorted({s for c, _, _ in rows for s in c})
    rows = [(dict(c), k, set(src)) for c, k, src in rows]
    pivot_row = 0
    for s in syms:
        idx = next((i for i in range(pivot_row, len(rows)) if rows[i][0].get(s)), None)
        if idx is None:
            continue
        rows[pivot_row], rows[idx] = rows[idx], rows[pivot_row]
        pc, pk, psrc = rows[pivot_row]
        f = pc[s]
        pc = {t: v / f for t, v in pc.items()}
        pk = pk * Radical.of(Fraction(1) / f)
        rows[pivot_row] = (pc, pk, psrc)
        for i, (c, k, src) in enumerate(rows):
            if i == pivot_row or not c.get(s):
                continue
            g = c[s]
            nc = dict(c)
            for t, v in pc.items():
                nc[t] = nc.get(t, Fraction(0)) - g * v
            nc = {t: v for t, v in nc.items() if v}
            rows[i] = (nc, k - pk * Radical.of(g), src | psrc)
        pivot_row += 1
    return rows


def _to_row(sub: Poly):
    coefs = {m[0][0]: c.rational() for m, c in sub.terms.items() if m}
    return coefs, sub.constant()


def _determines(rows, s: Symbol):
    for c, k, _ in _rref(rows):
        if list(c) == [s]:
            return -k
    return None


def _eliminate(rows, known) -> list[SolveStep]:
    base = [(*_to_row(sub), {text}) for text, sub, _ in rows]
    used_by = {text: used for text, _, used in rows}
    out = []
    for c, k, src in _rref(base):
        if not c:
            if not k.is_zero():
                raise InconsistentSystem(f"equations {sorted(src)} are inconsistent")
            continue
        if len(c) != 1 or len(src) < 2:
            continue
        (s,) = c
        value = -k
        # drop sources that are not needed, keeping the step small
        keep = sorted(src)
        for t in list(keep):
            trial = [b for b in base if next(iter(b[2])) in keep and next(iter(b[2])) != t]
            if len(trial) >= 1 and _determines(trial, s) == value:
                keep.remove(t)
        if len(keep) < 2:
            continue  # a single equation suffices; substitution covers it
        subs = tuple(sorted({u for t in keep for u in used_by[t]}))
        out.append(SolveStep("elimination", s, value, tuple(keep), subs))
    return out
