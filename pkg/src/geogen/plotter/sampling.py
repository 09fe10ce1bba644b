"""Predicate-combination sampling and literal instantiation."""

from __future__ import annotations

import string

import numpy as np

from geogen.errors import GeoError, NoCompatibleRelation
from geogen.formal.entities import Literal
from geogen.formal.registry import PredicateDef, Registry

from geogen.plotter.diagram import SynthConfig


def point_name(i: int) -> str:
    """A..Z, then A1..Z1, A2.. (index 26 is ``A1``)."""
    letter = string.ascii_uppercase[i % 26]
    return letter if i < 26 else f"{letter}{i // 26}"


def compatible_relations(registry: Registry, entity: PredicateDef) -> list[PredicateDef]:
    return [p for p in registry.by_kind("relation", sampled_only=True) if "*" in p.compat or entity.name in p.compat]


def sample_combination(registry: Registry, config: SynthConfig, rng: np.random.Generator) -> list[PredicateDef]:
    """One entity predicate plus a random number of compatible relations."""
    ents = registry.by_kind("entity", sampled_only=True)
    if not ents:
        raise NoCompatibleRelation("registry has no sampleable entity predicate")
    ent = ents[int(rng.integers(len(ents)))]
    rels = compatible_relations(registry, ent)
    if not rels:
        raise NoCompatibleRelation(f"no relation predicate is compatible with {ent.name}")
    lo, hi = config.relation_range
    hi = max(0, min(hi, config.max_predicates - 1))
    lo = min(lo, hi)
    n = int(rng.integers(lo, hi + 1))
    return [ent] + [rels[int(rng.integers(len(rels)))] for _ in range(n)]


class _Scene:
    """Book-keeping for what exists while literals are being instantiated."""

    def __init__(self, registry: Registry):
        self.registry = registry
        self.points: list[str] = []
        self.lines: list[tuple[str, str]] = []
        self.collinear: list[tuple[str, str, str]] = []
        self.polygon: tuple[str, ...] = ()
        self.used: set[tuple] = set()
        self.literals: list[Literal] = []

    def fresh(self, taken: list[str]) -> str:
        return point_name(len(self.points) + len(taken))

    def on_line(self, p: str, a: str, b: str) -> bool:
        if p in (a, b):
            return True
        return any({a, b, p} <= set(c) for c in self.collinear)

    def split(self, a: str, b: str) -> bool:
        return any({c[0], c[2]} == {a, b} for c in self.collinear)

    def commit(self, lit: Literal, fresh: list[str]) -> None:
        self.points.extend(fresh)
        self.literals.append(lit)
        for c in self.registry.closure([lit]):
            if c.predicate == "Line":
                seg = tuple(c.args[0].points)
                if seg not in self.lines:
                    self.lines.append(seg)  # type: ignore[arg-type]
            elif c.predicate == "Collinear":
                self.collinear.append(tuple(c.args[0].points))  # type: ignore[arg-type]


def _bind_relation(scene: _Scene, pred: PredicateDef, rng: np.random.Generator):
    src = dict(pred.bind)
    args: list[tuple[str, ...]] = []
    fresh: list[str] = []
    bound: list[str] = []
    key = [pred.name]

    def pick(cands):
        return cands[int(rng.integers(len(cands)))] if cands else None

    for slot in pred.slots:
        how = src.get(slot.name, "fresh")
        if slot.kind == "point":
            if how == "fresh":
                p = scene.fresh(fresh)
                fresh.append(p)
                args.append((p,))
                bound.append(p)
                continue
            p = pick([q for q in scene.points if q not in bound])
            if p is None:
                return None
            args.append((p,))
            key.append(p)
            bound.append(p)
        elif slot.kind == "segment":
            if how == "side":
                # a segment that already carries a point would make the new
                # point coincide with it too often (e.g. foot == midpoint)
                seg = pick([
                    s for s in scene.lines
                    if not any(scene.on_line(b, *s) for b in bound) and not scene.split(*s)
                ])
                if seg is None:
                    return None
                args.append(seg)
                key.append(seg)
                bound.extend(seg)
            elif how == "diagonal":
                n = len(scene.polygon)
                diags = [(scene.polygon[i], scene.polygon[i + 2]) for i in range(n - 2) if n == 4]
                seg = pick([d for d in diags if not set(d) & set(bound)])
                if seg is None:
                    return None
                args.append(seg)
                key.append(seg)
                bound.extend(seg)
            else:
                segs = [tuple(a) for a in args if len(a) == 2]
                if how == "ray":
                    cands = list(scene.points)
                else:
                    cands = [q for q in scene.points if q not in bound and not any(scene.on_line(q, *s) for s in segs)]
                c = pick(cands)
                if c is None:
                    return None
                p = scene.fresh(fresh)
                fresh.append(p)
                args.append((c, p))
                key.append((c,))
                bound.extend((c, p))
        else:
            if how != "polygon" or len(scene.polygon) != len(slot.letters):
                return None
            args.append(scene.polygon)
            key.append(scene.polygon)
            bound.extend(scene.polygon)
    return args, fresh, (key[0],) + tuple(sorted(map(str, key[1:])))


def instantiate(combo: list[PredicateDef], rng: np.random.Generator, registry: Registry) -> list[Literal]:
    """Assign point names A, B, C, ... to the sampled predicates.

    Relations bind to existing elements as their ``bind`` sources require;
    a relation that cannot be bound (no candidate left) is skipped.
    """
    scene = _Scene(registry)
    ent, *rels = combo
    pts = []
    args = []
    for slot in ent.slots:
        names = tuple(point_name(len(pts) + i) for i in range(len(slot.letters)))
        pts.extend(names)
        args.append(names)
    lit = registry.make_literal(ent.name, args)
    scene.polygon = tuple(pts)
    scene.commit(lit, pts)
    for pred in rels:
        for _ in range(8):
            got = _bind_relation(scene, pred, rng)
            if got is None:
                break
            args, fresh, key = got
            if key in scene.used:
                continue
            try:
                lit = registry.make_literal(pred.name, args)
            except GeoError:
                continue
            scene.used.add(key)
            scene.commit(lit, fresh)
            break
    return scene.literals
