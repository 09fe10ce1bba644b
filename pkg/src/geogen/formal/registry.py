"""Predicate/theorem registry and its line-oriented definition format.

File format (one definition per line, ``#`` starts a comment)::

    predicate Name(SLOT:kind, ...) key=value ...
    theorem <id> <name>: premises=[...] conclusions=[...] [injective=no]

Slot names are the point letters of the slot (``M:point``, ``AB:segment``,
``ABCD:polygon4``); constraint templates and construction effects refer to
those letters.  Slot kinds: point, segment, angle, polygon3, polygon4,
polygon, circle.

Predicate attributes:

``kind``          entity | relation | measure (required)
``constraints``   ``[eq; eq; ...]`` coordinate equations over ``x(P)``,
                  ``y(P)``, ``dist2(A,B)``, ``dot(A,B,C)`` (BA.BC),
                  ``vdot(A,B,C,D)`` (AB.CD), ``cross(A,B,C,D)`` (AB x CD)
``requires``      ``[between(A,B,C); ...]`` inequality side conditions
``constructs``    ``[Lit; ...]`` literals implied by an assertion
``sample``        yes | no: whether the plotter may sample it
``bind``          ``[SLOT:source; ...]`` how the plotter fills each slot
                  (fresh, side, vertex, ray, diagonal, polygon)
``compat``        ``[Entity; ...]`` or ``*``: entity predicates it attaches to
``commutative``   yes: argument order is irrelevant (args are sorted)
``reflect``       yes: polygon slots also match reflected orderings
``circle``        ``O,A``: draw a circle centred at O through A

Theorem items inside ``premises``/``conclusions`` are separated by ``;``;
an item containing ``=`` is an equation, anything else a literal pattern.
Pattern variables are written ``?A``.  Ids of 1000 and above are reserved
for the equation solver's derivation steps.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from importlib import resources
from types import MappingProxyType
from typing import Iterable, Mapping

from geogen.errors import (
    ArityMismatch,
    DanglingReference,
    DuplicateName,
    GeoError,
    GeoSyntaxError,
    MalformedEntity,
    SlotKindMismatch,
    UnknownPredicate,
    UnknownTheorem,
)
from geogen.formal.entities import (
    SLOT_SIZES,
    Entity,
    Literal,
    make_entity,
    split_pattern,
    split_points,
)
from geogen.formal.expr import (
    MEASURE_KINDS,
    Equation,
    Expr,
    Sym,
    Symbol,
    format_expr,
    map_symbols,
    measure,
    parse_expression,
    symbols_of,
)

RESERVED_THEOREM_ID = 1000
SOLVER_THEOREMS = {1000: "substitution", 1001: "isolation", 1002: "elimination"}
COORD_FUNCS = {"x": 1, "y": 1, "dist2": 2, "dot": 3, "vdot": 4, "cross": 4}
INEQ_FUNCS = {"between": 3}


# -- definitions -------------------------------------------------------------

@dataclass(frozen=True)
class Slot:
    name: str
    kind: str

    @property
    def letters(self) -> tuple[str, ...]:
        return split_points(self.name)


@dataclass(frozen=True)
class LiteralPattern:
    predicate: str
    args: tuple[tuple[str, ...], ...]

    @property
    def variables(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for a in self.args:
            for t in a:
                seen.setdefault(t)
        return tuple(seen)

    @property
    def text(self) -> str:
        return f"{self.predicate}({','.join(''.join(a) for a in self.args)})"


@dataclass(frozen=True)
class EquationPattern:
    lhs: Expr
    rhs: Expr

    @cached_property
    def variables(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for s in sorted(symbols_of(self.lhs) | symbols_of(self.rhs)):
            for a in s.args:
                seen.setdefault(a)
        return tuple(seen)

    @property
    def text(self) -> str:
        return f"{format_expr(self.lhs)}={format_expr(self.rhs)}"

    def instantiate(self, binding: Mapping[str, str]) -> Equation:
        key = tuple(binding.get(v, v) for v in self.variables)
        return _instantiate_equation(self, key)


@lru_cache(maxsize=100_000)
def _instantiate_equation(pat: EquationPattern, key: tuple[str, ...]) -> Equation:
    binding = dict(zip(pat.variables, key))

    def sub(s: Symbol) -> Expr:
        if s.kind in MEASURE_KINDS:
            return Sym(measure(s.kind, [binding.get(a, a) for a in s.args]))
        return Sym(s)

    return Equation.make(map_symbols(pat.lhs, sub), map_symbols(pat.rhs, sub))


@dataclass(frozen=True)
class PredicateDef:
    name: str
    kind: str
    slots: tuple[Slot, ...]
    constraints: tuple[str, ...] | None = None
    requires: tuple[str, ...] = ()
    constructs: tuple[LiteralPattern, ...] = ()
    sample: bool = False
    bind: tuple[tuple[str, str], ...] = ()
    compat: tuple[str, ...] = ("*",)
    commutative: bool = False
    reflect: bool = False
    circle: tuple[str, str] | None = None

    @property
    def arity(self) -> int:
        return len(self.slots)

    @property
    def letters(self) -> tuple[str, ...]:
        return tuple(p for s in self.slots for p in s.letters)

    def letter_map(self, lit: Literal) -> dict[str, str]:
        """Map slot letters to the literal's concrete point names."""
        out = {}
        for slot, ent in zip(self.slots, lit.args):
            out.update(zip(slot.letters, ent.points))
        return out


@dataclass(frozen=True)
class TheoremDef:
    id: int
    name: str
    premises: tuple[LiteralPattern, ...]
    algebraic: tuple[EquationPattern, ...] = ()
    conclusions: tuple[LiteralPattern, ...] = ()
    equations: tuple[EquationPattern, ...] = ()
    injective: bool = True

    @property
    def variables(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for p in self.premises:
            for v in p.variables:
                seen.setdefault(v)
        return tuple(seen)


@dataclass(frozen=True)
class Registry:
    predicates: Mapping[str, PredicateDef] = field(default_factory=dict)
    theorems: Mapping[int, TheoremDef] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "predicates", MappingProxyType(dict(self.predicates)))
        object.__setattr__(self, "theorems", MappingProxyType(dict(self.theorems)))
        object.__setattr__(self, "_by_name", {t.name: t for t in self.theorems.values()})
        object.__setattr__(self, "_literals", {})

    # -- lookup ------------------------------------------------------------
    def predicate(self, name: str) -> PredicateDef:
        try:
            return self.predicates[name]
        except KeyError:
            raise UnknownPredicate(f"unknown predicate {name!r}") from None

    def theorem(self, key: int | str) -> TheoremDef:
        if isinstance(key, str) and key.isdigit():
            key = int(key)
        try:
            if isinstance(key, int):
                return self.theorems[key]
            return self._by_name[key]  # type: ignore[attr-defined]
        except KeyError:
            raise UnknownTheorem(f"unknown theorem {key!r}") from None

    def theorem_name(self, tid: int) -> str:
        if tid in SOLVER_THEOREMS:
            return SOLVER_THEOREMS[tid]
        return self.theorem(tid).name

    def sorted_theorems(self) -> list[TheoremDef]:
        return [self.theorems[k] for k in sorted(self.theorems)]

    def by_kind(self, kind: str, sampled_only: bool = False) -> list[PredicateDef]:
        return [
            p for _, p in sorted(self.predicates.items())
            if p.kind == kind and (p.sample or not sampled_only)
        ]

    # -- literals ----------------------------------------------------------
    def make_literal(self, name: str, args: Iterable) -> Literal:
        args = [a.points if isinstance(a, Entity) else a for a in args]
        key = (name, tuple(a if isinstance(a, str) else tuple(a) for a in args))
        cache = self._literals  # type: ignore[attr-defined]
        lit = cache.get(key)
        if lit is None:
            lit = cache[key] = self._make_literal(name, args)
        return lit

    def _make_literal(self, name: str, args: list) -> Literal:
        pred = self.predicate(name)
        if len(args) != pred.arity:
            raise ArityMismatch(f"{name} takes {pred.arity} arguments, got {len(args)}")
        ents = []
        for slot, a in zip(pred.slots, args):
            if isinstance(a, Entity):
                a = a.points
            if isinstance(a, str):
                a = split_points(a)
            dihedral = pred.reflect and slot.kind.startswith("polygon")
            ents.append(make_entity(slot.kind, tuple(a), dihedral=dihedral))
        if pred.commutative:
            ents.sort(key=lambda e: e.text)
        return Literal(name, tuple(ents))

    def parse_literal(self, text: str) -> Literal:
        name, args = split_call(text)
        pred = self.predicate(name)
        if len(args) != pred.arity:
            raise ArityMismatch(f"{name} takes {pred.arity} arguments, got {len(args)}")
        return self.make_literal(name, [split_points(a) for a in args])

    def constructs_of(self, lit: Literal) -> list[Literal]:
        pred = self.predicate(lit.predicate)
        if not pred.constructs:
            return []
        m = pred.letter_map(lit)
        return [self.make_literal(c.predicate, [[m[t] for t in a] for a in c.args]) for c in pred.constructs]

    def closure(self, lits: Iterable[Literal]) -> list[Literal]:
        """``lits`` plus everything their construction effects imply, in
        discovery order."""
        out: dict[str, Literal] = {}
        stack = list(lits)
        stack.reverse()
        while stack:
            lit = stack.pop()
            if lit.text in out:
                continue
            out[lit.text] = lit
            stack.extend(reversed(self.constructs_of(lit)))
        return list(out.values())

    def instantiate(self, pat: LiteralPattern, binding: Mapping[str, str]) -> Literal:
        return self.make_literal(pat.predicate, [[binding.get(t, t) for t in a] for a in pat.args])


def format_literal(lit: Literal) -> str:
    return lit.text


def parse_literal(text: str, registry: Registry) -> Literal:
    return registry.parse_literal(text)


# -- DSL parsing -------------------------------------------------------------

_CALL_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*\((.*)\)\s*$")


def split_call(text: str) -> tuple[str, list[str]]:
    m = _CALL_RE.match(text)
    if not m:
        raise GeoSyntaxError(f"expected Name(args): {text!r}")
    inner = m.group(2).strip()
    args = [a.strip() for a in inner.split(",")] if inner else []
    if any(not a for a in args):
        raise MalformedEntity(f"empty argument in {text!r}")
    return m.group(1), args


def _split_top(text: str, sep: str = ";") -> list[str]:
    out, depth, cur = [], 0, []
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == sep and depth == 0:
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    tail = "".join(cur).strip()
    if tail:
        out.append(tail)
    return [o for o in out if o]


def _parse_attrs(text: str, lineno: int) -> dict[str, object]:
    attrs: dict[str, object] = {}
    pos = 0
    n = len(text)
    while pos < n:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        m = re.compile(r"([a-z_]+)=").match(text, pos)
        if not m:
            raise GeoSyntaxError(f"expected key=value near {text[pos:pos + 20]!r}", lineno)
        key = m.group(1)
        pos = m.end()
        if pos < n and text[pos] == "[":
            depth, start = 0, pos
            while pos < n:
                if text[pos] == "[":
                    depth += 1
                elif text[pos] == "]":
                    depth -= 1
                    if depth == 0:
                        break
                pos += 1
            if pos >= n:
                raise GeoSyntaxError(f"unclosed [ in {key}", lineno)
            attrs[key] = _split_top(text[start + 1:pos])
            pos += 1
        elif pos < n and text[pos] == '"':
            end = text.find('"', pos + 1)
            if end < 0:
                raise GeoSyntaxError(f"unclosed string in {key}", lineno)
            attrs[key] = text[pos + 1:end]
            pos = end + 1
        else:
            m2 = re.compile(r"\S+").match(text, pos)
            attrs[key] = m2.group() if m2 else ""
            pos = m2.end() if m2 else pos
        if key in attrs and list(attrs).count(key) > 1:  # pragma: no cover
            raise GeoSyntaxError(f"duplicate attribute {key}", lineno)
    return attrs


def _yes(v: object) -> bool:
    return str(v).lower() in ("yes", "true", "1")


def _parse_pattern(text: str, lineno: int) -> LiteralPattern:
    try:
        name, args = split_call(text)
        return LiteralPattern(name, tuple(split_pattern(a) for a in args))
    except GeoError as exc:
        raise GeoSyntaxError(str(exc), lineno) from exc


def _parse_eq_pattern(text: str, lineno: int) -> EquationPattern:
    if text.count("=") != 1:
        raise GeoSyntaxError(f"bad equation {text!r}", lineno)
    a, b = text.split("=")
    try:
        return EquationPattern(parse_expression(a, canonical=False), parse_expression(b, canonical=False))
    except GeoError as exc:
        raise GeoSyntaxError(str(exc), lineno) from exc


_PRED_RE = re.compile(r"^predicate\s+([A-Za-z_][A-Za-z0-9_]*)\s*\(([^)]*)\)\s*(.*)$")
_THM_RE = re.compile(r"^theorem\s+(\d+)\s+([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(.*)$")


def _parse_predicate(m: re.Match, lineno: int) -> PredicateDef:
    name, slot_text, rest = m.groups()
    slots = []
    for part in [p.strip() for p in slot_text.split(",") if p.strip()]:
        if ":" not in part:
            raise GeoSyntaxError(f"slot {part!r} needs NAME:kind", lineno)
        sname, kind = (s.strip() for s in part.split(":", 1))
        if kind not in SLOT_SIZES:
            raise GeoSyntaxError(f"unknown slot kind {kind!r}", lineno)
        try:
            letters = split_points(sname)
        except MalformedEntity as exc:
            raise GeoSyntaxError(str(exc), lineno) from exc
        lo, hi = SLOT_SIZES[kind]
        if not lo <= len(letters) <= hi:
            raise GeoSyntaxError(f"slot {sname} does not fit kind {kind}", lineno)
        slots.append(Slot(sname, kind))
    letters = [p for s in slots for p in s.letters]
    if len(set(letters)) != len(letters):
        raise GeoSyntaxError(f"slot letters of {name} must be distinct", lineno)
    attrs = _parse_attrs(rest, lineno)
    unknown = set(attrs) - {
        "kind", "constraints", "requires", "constructs", "sample", "bind",
        "compat", "commutative", "reflect", "circle",
    }
    if unknown:
        raise GeoSyntaxError(f"unknown attribute(s) {sorted(unknown)}", lineno)
    kind = attrs.get("kind")
    if kind not in ("entity", "relation", "measure"):
        raise GeoSyntaxError(f"predicate {name} needs kind=entity|relation|measure", lineno)
    constraints = None
    if "constraints" in attrs:
        constraints = tuple(attrs["constraints"])  # type: ignore[arg-type]
        for c in constraints:
            _check_template(c, set(letters), COORD_FUNCS, lineno, needs_eq=True)
    requires = tuple(attrs.get("requires", ()))  # type: ignore[arg-type]
    for r in requires:
        _check_template(r, set(letters), INEQ_FUNCS, lineno, needs_eq=False)
    constructs = tuple(_parse_pattern(c, lineno) for c in attrs.get("constructs", ()))  # type: ignore[union-attr]
    for c in constructs:
        for a in c.args:
            for t in a:
                if t not in letters:
                    raise GeoSyntaxError(f"construct {c.text} uses undeclared point {t}", lineno)
    bind = []
    for b in attrs.get("bind", ()):  # type: ignore[union-attr]
        sname, _, src = b.partition(":")
        if sname not in [s.name for s in slots] or src not in ("fresh", "side", "vertex", "ray", "diagonal", "polygon"):
            raise GeoSyntaxError(f"bad bind entry {b!r}", lineno)
        bind.append((sname, src))
    compat = attrs.get("compat", "*")
    compat = ("*",) if compat == "*" else tuple(compat)  # type: ignore[arg-type]
    circle = None
    if "circle" in attrs:
        parts = str(attrs["circle"]).split(",")
        if len(parts) != 2 or any(p not in letters for p in parts):
            raise GeoSyntaxError("circle=O,A must name two slot points", lineno)
        circle = (parts[0], parts[1])
    return PredicateDef(
        name=name, kind=str(kind), slots=tuple(slots), constraints=constraints,
        requires=requires, constructs=constructs, sample=_yes(attrs.get("sample", "no")),
        bind=tuple(bind), compat=compat, commutative=_yes(attrs.get("commutative", "no")),
        reflect=_yes(attrs.get("reflect", "no")), circle=circle,
    )


def _check_template(text: str, letters: set[str], funcs: dict[str, int], lineno: int, needs_eq: bool) -> None:
    if needs_eq and text.count("=") != 1:
        raise GeoSyntaxError(f"constraint {text!r} must be an equation", lineno)
    for side in text.split("="):
        try:
            e = parse_expression(side, canonical=False)
        except GeoError as exc:
            raise GeoSyntaxError(str(exc), lineno) from exc
        for s in symbols_of(e):
            if s.kind not in funcs or len(s.args) != funcs[s.kind]:
                raise GeoSyntaxError(f"bad template function {s.text}", lineno)
            for a in s.args:
                if a not in letters:
                    raise GeoSyntaxError(f"template references undeclared slot point {a}", lineno)


def _parse_theorem(m: re.Match, lineno: int) -> TheoremDef:
    tid, name, rest = int(m.group(1)), m.group(2), m.group(3)
    if tid >= RESERVED_THEOREM_ID:
        raise GeoSyntaxError(f"theorem ids >= {RESERVED_THEOREM_ID} are reserved", lineno)
    attrs = _parse_attrs(rest, lineno)
    unknown = set(attrs) - {"premises", "conclusions", "injective"}
    if unknown:
        raise GeoSyntaxError(f"unknown attribute(s) {sorted(unknown)}", lineno)
    prem, alg, concl, eqs = [], [], [], []
    for item in attrs.get("premises", ()):  # type: ignore[union-attr]
        (alg.append(_parse_eq_pattern(item, lineno)) if "=" in item else prem.append(_parse_pattern(item, lineno)))
    for item in attrs.get("conclusions", ()):  # type: ignore[union-attr]
        (eqs.append(_parse_eq_pattern(item, lineno)) if "=" in item else concl.append(_parse_pattern(item, lineno)))
    if not prem:
        raise GeoSyntaxError(f"theorem {name} needs at least one literal premise", lineno)
    if not concl and not eqs:
        raise GeoSyntaxError(f"theorem {name} has no conclusions", lineno)
    return TheoremDef(tid, name, tuple(prem), tuple(alg), tuple(concl), tuple(eqs),
                      injective=_yes(attrs.get("injective", "yes")))


def load_registry(definition_text: str) -> Registry:
    """Parse a registry definition and validate all cross references."""
    predicates: dict[str, PredicateDef] = {}
    theorems: dict[int, TheoremDef] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(definition_text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if m := _PRED_RE.match(line):
            p = _parse_predicate(m, lineno)
            if p.name in predicates:
                raise DuplicateName(f"line {lineno}: predicate {p.name} defined twice")
            predicates[p.name] = p
            lines[p.name] = lineno
        elif m := _THM_RE.match(line):
            t = _parse_theorem(m, lineno)
            if t.id in theorems:
                raise DuplicateName(f"line {lineno}: theorem id {t.id} defined twice")
            if any(o.name == t.name for o in theorems.values()):
                raise DuplicateName(f"line {lineno}: theorem name {t.name} defined twice")
            theorems[t.id] = t
            lines[f"#{t.id}"] = lineno
        else:
            raise GeoSyntaxError(f"unrecognised line {line[:40]!r}", lineno)
    _validate(predicates, theorems, lines)
    return Registry(predicates, theorems)


def _validate(predicates: dict[str, PredicateDef], theorems: dict[int, TheoremDef], lines: dict[str, int]) -> None:
    def check_pattern(pat: LiteralPattern, where: str, lineno: int) -> None:
        if pat.predicate not in predicates:
            raise DanglingReference(f"line {lineno}: {where} uses unknown predicate {pat.predicate!r}")
        pred = predicates[pat.predicate]
        if len(pat.args) != pred.arity:
            raise ArityMismatch(f"line {lineno}: {pat.text} has wrong arity")
        for slot, a in zip(pred.slots, pat.args):
            lo, hi = SLOT_SIZES[slot.kind]
            if not lo <= len(a) <= hi:
                raise SlotKindMismatch(f"line {lineno}: {pat.text} slot {slot.name} is a {slot.kind}")

    for p in predicates.values():
        for c in p.constructs:
            check_pattern(c, f"predicate {p.name}", lines[p.name])
        for e in p.compat:
            if e != "*" and e not in predicates:
                raise DanglingReference(f"line {lines[p.name]}: compat names unknown predicate {e!r}")
    for t in theorems.values():
        ln = lines[f"#{t.id}"]
        for pat in t.premises + t.conclusions:
            check_pattern(pat, f"theorem {t.name}", ln)
        for eq in t.algebraic + t.equations:
            for s in symbols_of(eq.lhs) | symbols_of(eq.rhs):
                if s.kind not in MEASURE_KINDS or s.kind not in predicates:
                    raise DanglingReference(f"line {ln}: theorem {t.name} uses unknown measure {s.kind!r}")
        bound = set(t.variables)
        needed = {v for p in t.conclusions for v in p.variables}
        needed |= {v for e in t.equations + t.algebraic for v in e.variables}
        if not needed <= bound:
            raise DanglingReference(f"line {ln}: theorem {t.name} uses unbound variables {sorted(needed - bound)}")


def builtin_registry_text() -> str:
    return resources.files("geogen.data").joinpath("core.reg").read_text(encoding="utf-8")


_CORE: Registry | None = None


def core_registry() -> Registry:
    """The shipped registry (loaded once; registries are immutable)."""
    global _CORE
    if _CORE is None:
        _CORE = load_registry(builtin_registry_text())
    return _CORE
