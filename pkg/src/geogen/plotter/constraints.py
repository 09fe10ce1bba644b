"""Coordinate constraint systems and their point-by-point solver.

Points are solved in name order.  For the point ``P`` being placed, every
equation whose other coordinates are already known is reduced to a
polynomial in ``(x_P, y_P)`` of degree at most two:

* linear rows are collected; circle-shaped quadratics (equal ``x^2`` and
  ``y^2`` coefficients, no ``xy`` term) are differenced against the first
  circle, which turns all but one of them into linear rows;
* linear rank 2 fixes the point; rank 1 with a circle intersects line and
  circle (random root); rank 1 alone samples along the line inside the box;
  rank 0 samples on the circle or uniformly in the box;
* anything else is a nonlinear cycle and the attempt is resampled.

Templates must therefore be written so each point is determined by earlier
points.  Every attempt ends with residual and degeneracy checks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from geogen.errors import MissingConstraintTemplate, UnsatisfiedAfterRetries
from geogen.formal.entities import Literal, point_sort_key
from geogen.formal.registry import Registry

from geogen.plotter.diagram import Canvas, Diagram, SynthConfig
from geogen.plotter.geometry import (
    FPoly,
    between_holds,
    dist,
    fpoly_eval,
    fpoly_substitute,
    fpoly_vars,
    point_segment_distance,
    requires_points,
    template_fpoly,
    tri_area,
)


@dataclass
class Constraint:
    source: str        # generating literal
    text: str          # template with concrete point names
    poly: FPoly


@dataclass
class ConstraintSystem:
    points: list[str] = field(default_factory=list)
    equations: list[Constraint] = field(default_factory=list)
    requires: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)
    polygons: list[tuple[str, ...]] = field(default_factory=list)
    segments: list[tuple[str, str]] = field(default_factory=list)
    collinear: list[tuple[str, str, str]] = field(default_factory=list)
    circles: list[tuple[str, str]] = field(default_factory=list)
    literals: list[Literal] = field(default_factory=list)
    closure: list[Literal] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not self.points and not self.equations


def _concrete(template: str, letters: dict[str, str]) -> str:
    import re

    return re.sub(r"\(([^()]*)\)", lambda m: "(" + ",".join(letters.get(a.strip(), a.strip()) for a in m.group(1).split(",")) + ")", template)


def build_constraints(literals: list[Literal], registry: Registry) -> ConstraintSystem:
    """Equations of the generating literals plus the side conditions of their
    construction closure."""
    sys = ConstraintSystem(literals=list(literals))
    if not literals:
        return sys
    for lit in literals:
        pred = registry.predicate(lit.predicate)
        if pred.constraints is None:
            raise MissingConstraintTemplate(f"{lit.predicate} has no constraint template")
        letters = pred.letter_map(lit)
        for t in pred.constraints:
            sys.equations.append(Constraint(lit.text, _concrete(t, letters), template_fpoly(t, letters)))
    sys.closure = registry.closure(literals)
    pts: set[str] = set()
    for lit in sys.closure:
        pts |= lit.points()
        pred = registry.predicate(lit.predicate)
        letters = pred.letter_map(lit)
        for r in pred.requires:
            item = (r.split("(")[0], requires_points(r, letters))
            if item not in sys.requires:
                sys.requires.append(item)
        for ent in lit.args:
            if ent.kind.startswith("polygon") and ent.points not in sys.polygons:
                sys.polygons.append(ent.points)
        if lit.predicate == "Line":
            seg = (lit.args[0].points[0], lit.args[0].points[1])
            if seg not in sys.segments:
                sys.segments.append(seg)
        if lit.predicate == "Collinear":
            sys.collinear.append(tuple(lit.args[0].points))  # type: ignore[arg-type]
        if pred.circle:
            c = (letters[pred.circle[0]], letters[pred.circle[1]])
            if c not in sys.circles:
                sys.circles.append(c)
        if pred.kind == "entity" and pred.sample and len(lit.args) == 1 and lit.args[0].kind == "angle":
            # vertex-specific triangles still need a non-degenerate triangle
            p = lit.args[0].points
            if p not in sys.polygons:
                sys.polygons.append(p)
    sys.points = sorted(pts, key=point_sort_key)
    return sys


# -- solving -----------------------------------------------------------------

class _Reject(Exception):
    pass


def _coeffs(fp: FPoly, p: str) -> dict[str, float]:
    X, Y = "x_" + p, "y_" + p
    names = {(): "c", ((X, 1),): "x", ((Y, 1),): "y", ((X, 2),): "xx", ((Y, 2),): "yy", ((X, 1), (Y, 1)): "xy"}
    out = dict.fromkeys(("c", "x", "y", "xx", "yy", "xy"), 0.0)
    for mono, c in fp.items():
        key = tuple(sorted(mono))
        if key not in names:
            raise _Reject(f"unsupported term while placing {p}")
        out[names[key]] += c
    return out


def _box_interval(p0, d, lo: float, hi: float) -> tuple[float, float] | None:
    smin, smax = -math.inf, math.inf
    for k in range(2):
        if abs(d[k]) < 1e-12:
            if not lo <= p0[k] <= hi:
                return None
            continue
        a, b = (lo - p0[k]) / d[k], (hi - p0[k]) / d[k]
        smin, smax = max(smin, min(a, b)), min(smax, max(a, b))
    return (smin, smax) if smin < smax else None


def _place(p: str, polys: list[FPoly], rng: np.random.Generator, E: float) -> tuple[float, float]:
    lines, circles = [], []
    for fp in polys:
        c = _coeffs(fp, p)
        quad = max(abs(c["xx"]), abs(c["yy"]), abs(c["xy"]))
        if quad < 1e-9:
            if abs(c["x"]) + abs(c["y"]) < 1e-12:
                if abs(c["c"]) > 1e-9:
                    raise _Reject(f"inconsistent constant row while placing {p}")
                continue
            lines.append((c["x"], c["y"], c["c"]))
        elif abs(c["xy"]) < 1e-9 and abs(c["xx"] - c["yy"]) < 1e-9 * max(1.0, quad):
            k = c["xx"]
            circles.append((c["x"] / k, c["y"] / k, c["c"] / k))
        else:
            raise _Reject(f"nonlinear cycle while placing {p}")
    if len(circles) > 1:
        d0, e0, f0 = circles[0]
        lines.extend((d - d0, e - e0, f - f0) for d, e, f in circles[1:])
        circles = circles[:1]
    if lines:
        A = np.array([[a, b] for a, b, _ in lines])
        norms = np.linalg.norm(A, axis=1)
        A = A / norms[:, None]
        rhs = -np.array([c for *_, c in lines]) / norms
        rank = np.linalg.matrix_rank(A, tol=1e-9)
    else:
        rank = 0
    if rank == 2:
        sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        return float(sol[0]), float(sol[1])
    if rank == 1:
        i = int(np.argmax(norms))
        n = A[i]
        p0 = n * rhs[i]
        d = np.array([-n[1], n[0]])
        if circles:
            dd, ee, ff = circles[0]
            b = 2 * p0 @ d + dd * d[0] + ee * d[1]
            c = p0 @ p0 + dd * p0[0] + ee * p0[1] + ff
            disc = b * b - 4 * c
            if disc <= 1e-12:
                raise _Reject(f"line misses circle while placing {p}")
            roots = sorted(((-b - math.sqrt(disc)) / 2, (-b + math.sqrt(disc)) / 2))
            s = roots[int(rng.integers(2))]
        else:
            iv = _box_interval(p0, d, 0.0, E)
            if iv is None:
                raise _Reject(f"constraint line for {p} misses the box")
            s = float(rng.uniform(*iv))
        q = p0 + s * d
        return float(q[0]), float(q[1])
    if circles:
        dd, ee, ff = circles[0]
        cx, cy = -dd / 2, -ee / 2
        r2 = cx * cx + cy * cy - ff
        if r2 <= 1e-12:
            raise _Reject(f"empty circle while placing {p}")
        t = float(rng.uniform(0, 2 * math.pi))
        return cx + math.sqrt(r2) * math.cos(t), cy + math.sqrt(r2) * math.sin(t)
    x, y = rng.uniform(0.0, E, size=2)
    return float(x), float(y)


def check_diagram(sys: ConstraintSystem, pts: dict[str, tuple[float, float]], config: SynthConfig) -> str | None:
    """Reason the placement is unacceptable, or None."""
    values = {f"{a}_{p}": v for p, xy in pts.items() for a, v in zip("xy", xy)}
    for c in sys.equations:
        r = fpoly_eval(c.poly, values)
        if not abs(r) <= config.residual_tol:
            return f"residual {r:.3g} on {c.text}"
    E = config.extent
    for p, (x, y) in pts.items():
        if not (-0.5 * E <= x <= 1.5 * E and -0.5 * E <= y <= 1.5 * E):
            return f"{p} outside the drawing area"
    sep = config.separation
    for a, b in itertools.combinations(sorted(pts), 2):
        if dist(pts[a], pts[b]) < sep:
            return f"{a} and {b} closer than {sep:g}"
    for poly in sys.polygons:
        n = len(poly)
        for i in range(n):
            tri = [pts[poly[(i + k) % n]] for k in range(3)]
            if tri_area(*tri) < config.min_area:
                return f"polygon {''.join(poly)} is degenerate"
    for name, args in sys.requires:
        if name == "between" and not between_holds(*(pts[a] for a in args)):
            return f"{args[1]} not strictly between {args[0]} and {args[2]}"
    recorded = {(a, m, b) for a, m, b in sys.collinear} | {(b, m, a) for a, m, b in sys.collinear}
    for a, b in sys.segments:
        for p in pts:
            if p in (a, b):
                continue
            d, t = point_segment_distance(pts[p], pts[a], pts[b])
            if d < 0.25 * sep and 0.0 < t < 1.0 and (a, p, b) not in recorded:
                return f"{p} lies on segment {a}{b} without a recorded relation"
    return None


def solve_coordinates(
    sys: ConstraintSystem, rng: np.random.Generator, config: SynthConfig, canvas: Canvas | None = None,
    attempts: int | None = None,
) -> Diagram:
    """Place all points; resamples up to ``attempts`` (default: the retry budget)."""
    diagnostics: list[str] = []
    if sys.is_empty():
        return Diagram(canvas=canvas or Canvas())
    E = config.extent
    attempts = config.retry_budget if attempts is None else attempts
    for attempt in range(attempts):
        values: dict[str, float] = {}
        pts: dict[str, tuple[float, float]] = {}
        try:
            for p in sys.points:
                X, Y = "x_" + p, "y_" + p
                known = set(values) | {X, Y}
                polys = [
                    fpoly_substitute(c.poly, values)
                    for c in sys.equations
                    if (X in (v := fpoly_vars(c.poly)) or Y in v) and v <= known
                ]
                x, y = _place(p, polys, rng, E)
                if not (math.isfinite(x) and math.isfinite(y)):
                    raise _Reject(f"non-finite coordinate for {p}")
                values[X], values[Y] = x, y
                pts[p] = (x, y)
        except _Reject as exc:
            diagnostics.append(f"attempt {attempt}: {exc}")
            continue
        reason = check_diagram(sys, pts, config)
        if reason is None:
            return Diagram(
                points=pts,
                segments=list(sys.segments),
                circles=list(sys.circles),
                literals=[l.text for l in sys.literals],
                initial=[l.text for l in sys.closure],
                canvas=canvas or Canvas(),
            )
        diagnostics.append(f"attempt {attempt}: {reason}")
    raise UnsatisfiedAfterRetries(f"no valid placement in {attempts} attempts", diagnostics)


def augment_segments(diagram: Diagram, rng: np.random.Generator, config: SynthConfig, count: int | None = None) -> Diagram:
    """Draw up to ``count`` extra segments between existing points.

    Skips pairs already drawn, pairs collinear with a drawn segment and
    segments that would pass through another point.
    """
    if count is None:
        lo, hi = config.extra_segment_range
        count = int(rng.integers(lo, hi + 1))
    out = Diagram.from_dict(diagram.to_dict())
    if count <= 0:
        return out
    pts = out.points
    sep = config.separation
    names = out.point_names()
    cands = []
    for a, b in itertools.combinations(names, 2):
        if out.has_segment(a, b):
            continue
        if any(_collinear(pts[a], pts[b], pts[s], pts[t]) for s, t in out.segments):
            continue
        if any(
            (d_t := point_segment_distance(pts[p], pts[a], pts[b]))[0] < 0.25 * sep and 0.0 < d_t[1] < 1.0
            for p in names if p not in (a, b)
        ):
            continue
        cands.append((a, b))
    if not cands:
        return out
    order = rng.permutation(len(cands))
    for i in order[:count]:
        a, b = cands[int(i)]
        out.add_segment(a, b)
        out.initial.append(f"Line({a}{b})")
    return out


def _collinear(p, q, s, t, tol: float = 1e-6) -> bool:
    L = dist(s, t)
    return all(abs((t[0] - s[0]) * (r[1] - s[1]) - (t[1] - s[1]) * (r[0] - s[0])) / L < tol * max(1.0, L) for r in (p, q))
