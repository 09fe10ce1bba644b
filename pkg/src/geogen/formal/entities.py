"""Geometric entities and literals with canonical forms.

Point names are an uppercase letter optionally followed by digits (``A``,
``P1``).  Compound entities are written by concatenating point names, so
``AB`` is a segment and ``A1BC`` a three-point entity ``(A1, B, C)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator

from geogen.errors import MalformedEntity, SlotKindMismatch

POINT_RE = re.compile(r"[A-Z][0-9]*")

SLOT_SIZES = {
    "point": (1, 1),
    "circle": (1, 1),
    "segment": (2, 2),
    "angle": (3, 3),
    "polygon3": (3, 3),
    "polygon4": (4, 4),
    "polygon": (3, 26),
}


def split_points(text: str) -> tuple[str, ...]:
    """Split ``"A1BC"`` into ``("A1", "B", "C")``; raises on stray characters."""
    text = text.strip()
    pos, out = 0, []
    while pos < len(text):
        m = POINT_RE.match(text, pos)
        if not m:
            raise MalformedEntity(f"bad point name in {text!r}")
        out.append(m.group())
        pos = m.end()
    if not out:
        raise MalformedEntity("empty entity")
    return tuple(out)


def split_pattern(text: str) -> tuple[str, ...]:
    """Split a pattern argument such as ``"?A?B"`` or ``"AB"`` into tokens."""
    text = text.strip()
    if "?" not in text:
        return split_points(text)
    toks = re.findall(r"\?[A-Za-z][A-Za-z0-9_]*?(?=\?|$)", text)
    if "".join(toks) != text:
        raise MalformedEntity(f"bad pattern argument {text!r}")
    return tuple(toks)


def point_sort_key(name: str) -> tuple[int, str]:
    # A < B < ... < Z < A1 < B1 ...
    return (int(name[1:] or 0), name[0])


@dataclass(frozen=True, order=False)
class Entity:
    kind: str
    points: tuple[str, ...]

    @property
    def text(self) -> str:
        return "".join(self.points)

    def __str__(self) -> str:
        return self.text

    def segments(self) -> Iterator["Entity"]:
        """Segments that must be drawn for this entity to be visible."""
        p = self.points
        if self.kind == "segment":
            yield self
        elif self.kind == "angle":
            yield make_entity("segment", (p[1], p[0]))
            yield make_entity("segment", (p[1], p[2]))
        elif self.kind.startswith("polygon"):
            for i in range(len(p)):
                yield make_entity("segment", (p[i], p[(i + 1) % len(p)]))


def _rotate_min(pts: tuple[str, ...]) -> tuple[str, ...]:
    i = min(range(len(pts)), key=lambda k: point_sort_key(pts[k]))
    return pts[i:] + pts[:i]


def canonical_points(kind: str, pts: tuple[str, ...], dihedral: bool = False) -> tuple[str, ...]:
    if kind == "segment":
        return tuple(sorted(pts, key=point_sort_key))
    if kind == "angle":
        if point_sort_key(pts[2]) < point_sort_key(pts[0]):
            return (pts[2], pts[1], pts[0])
        return pts
    if kind.startswith("polygon"):
        rot = _rotate_min(pts)
        if dihedral:
            ref = _rotate_min(tuple(reversed(pts)))
            rot = min(rot, ref, key=lambda t: [point_sort_key(x) for x in t])
        return rot
    return pts


def make_entity(kind: str, pts: tuple[str, ...] | list[str], dihedral: bool = False) -> Entity:
    pts = tuple(pts)
    lo, hi = SLOT_SIZES[kind]
    if len(pts) < lo or len(pts) > hi:
        if len(pts) < lo:
            raise MalformedEntity(f"{kind} needs {lo} points, got {''.join(pts)!r}")
        raise SlotKindMismatch(f"{''.join(pts)!r} does not fit a {kind} slot")
    if len(set(pts)) != len(pts):
        raise MalformedEntity(f"repeated point in {kind} {''.join(pts)!r}")
    for p in pts:
        if not POINT_RE.fullmatch(p):
            raise MalformedEntity(f"bad point name {p!r}")
    return Entity(kind, canonical_points(kind, pts, dihedral))


def symmetric_variants(kind: str, pts: tuple[str, ...], reflect: bool = False) -> list[tuple[str, ...]]:
    """All orderings of ``pts`` that denote the same entity (for matching)."""
    if kind in ("point", "circle"):
        return [pts]
    if kind == "segment":
        return [pts, (pts[1], pts[0])]
    if kind == "angle":
        return [pts, (pts[2], pts[1], pts[0])]
    n = len(pts)
    out = [pts[i:] + pts[:i] for i in range(n)]
    if reflect:
        rev = tuple(reversed(pts))
        out += [rev[i:] + rev[:i] for i in range(n)]
    return out


@dataclass(frozen=True)
class Literal:
    """An instantiated predicate; ``args`` are already canonical."""

    predicate: str
    args: tuple[Entity, ...]

    @property
    def text(self) -> str:
        return f"{self.predicate}({','.join(a.text for a in self.args)})"

    def points(self) -> set[str]:
        return {p for a in self.args for p in a.points}

    def __str__(self) -> str:
        return self.text

    def __lt__(self, other: "Literal") -> bool:
        return self.text < other.text
