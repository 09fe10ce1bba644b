"""Diagram and synthesis configuration types."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from geogen.formal.entities import point_sort_key


@dataclass(frozen=True)
class SynthConfig:
    extent: float = 20.0                   # sampling box is [0, extent]^2
    relation_range: tuple[int, int] = (1, 3)
    extra_segment_range: tuple[int, int] = (0, 2)
    max_predicates: int = 4                # entity + relations
    retry_budget: int = 50
    min_separation: float | None = None    # default 0.08 * extent
    area_ratio: float = 1e-3               # polygon triples: area >= ratio * extent^2
    residual_tol: float = 1e-6

    def __post_init__(self):
        lo, hi = self.relation_range
        if lo > hi or lo < 0:
            raise ValueError("relation_range must be a non-empty range")
        lo, hi = self.extra_segment_range
        if lo > hi or lo < 0:
            raise ValueError("extra_segment_range must be a non-empty range")
        if self.retry_budget < 1:
            raise ValueError("retry_budget must be >= 1")

    @property
    def separation(self) -> float:
        return 0.08 * self.extent if self.min_separation is None else self.min_separation

    @property
    def min_area(self) -> float:
        return self.area_ratio * self.extent ** 2


@dataclass(frozen=True)
class Canvas:
    width: int = 400
    height: int = 400
    margin: int = 36


@dataclass
class Diagram:
    points: dict[str, tuple[float, float]] = field(default_factory=dict)
    segments: list[tuple[str, str]] = field(default_factory=list)
    circles: list[tuple[str, str]] = field(default_factory=list)  # (center, point on circle)
    literals: list[str] = field(default_factory=list)             # generating literals
    initial: list[str] = field(default_factory=list)              # layer-0 literals
    givens: list[str] = field(default_factory=list)               # numeric given equations
    canvas: Canvas = field(default_factory=Canvas)
    id: str = ""
    seed: int | None = None

    def point_names(self) -> list[str]:
        return sorted(self.points, key=point_sort_key)

    def has_segment(self, a: str, b: str) -> bool:
        key = tuple(sorted((a, b), key=point_sort_key))
        return key in {tuple(sorted(s, key=point_sort_key)) for s in self.segments}

    def add_segment(self, a: str, b: str) -> None:
        key = tuple(sorted((a, b), key=point_sort_key))
        if key not in self.segments:
            self.segments.append(key)  # type: ignore[arg-type]

    def radius(self, circle: tuple[str, str]) -> float:
        (x0, y0), (x1, y1) = self.points[circle[0]], self.points[circle[1]]
        return ((x1 - x0) ** 2 + (y1 - y0) ** 2) ** 0.5

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "seed": self.seed,
            "points": {k: [self.points[k][0], self.points[k][1]] for k in self.point_names()},
            "segments": [list(s) for s in self.segments],
            "circles": [{"center": c, "through": p, "radius": self.radius((c, p))} for c, p in self.circles],
            "literals": list(self.literals),
            "initial": list(self.initial),
            "givens": list(self.givens),
            "canvas": {"width": self.canvas.width, "height": self.canvas.height, "margin": self.canvas.margin},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Diagram":
        cv = d.get("canvas") or {}
        return cls(
            points={k: (float(v[0]), float(v[1])) for k, v in d.get("points", {}).items()},
            segments=[(s[0], s[1]) for s in d.get("segments", [])],
            circles=[(c["center"], c["through"]) for c in d.get("circles", [])],
            literals=list(d.get("literals", [])),
            initial=list(d.get("initial", [])),
            givens=list(d.get("givens", [])),
            canvas=Canvas(**cv) if cv else Canvas(),
            id=d.get("id", ""),
            seed=d.get("seed"),
        )
