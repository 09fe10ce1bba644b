"""Float geometry on solved coordinates: constraint templates, measures and
a literal evaluator used for consistency checks."""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Mapping

from geogen.formal.entities import Literal, symmetric_variants
from geogen.formal.expr import (
    Expr,
    Sym,
    Symbol,
    evaluate_float,
    map_symbols,
    parse_expression,
    to_poly,
    var,
)
from geogen.formal.registry import PredicateDef, Registry

Point = tuple[float, float]
FPoly = dict[tuple[tuple[str, int], ...], float]


# -- coordinate helpers ------------------------------------------------------

def dist(p: Point, q: Point) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def tri_area(a: Point, b: Point, c: Point) -> float:
    return abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])) / 2


def polygon_area(pts: list[Point]) -> float:
    s = 0.0
    for i in range(len(pts)):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % len(pts)]
        s += x0 * y1 - x1 * y0
    return abs(s) / 2


def angle_deg(a: Point, b: Point, c: Point) -> float:
    v = (a[0] - b[0], a[1] - b[1])
    w = (c[0] - b[0], c[1] - b[1])
    cosv = (v[0] * w[0] + v[1] * w[1]) / (math.hypot(*v) * math.hypot(*w))
    return math.degrees(math.acos(max(-1.0, min(1.0, cosv))))


def point_segment_distance(p: Point, a: Point, b: Point) -> tuple[float, float]:
    """Distance from ``p`` to segment ``ab`` and the projection parameter."""
    dx, dy = b[0] - a[0], b[1] - a[1]
    L2 = dx * dx + dy * dy
    t = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / L2
    tc = max(0.0, min(1.0, t))
    return math.hypot(p[0] - a[0] - tc * dx, p[1] - a[1] - tc * dy), t


def measure_value(sym: Symbol, pts: Mapping[str, Point]) -> float:
    p = [pts[a] for a in sym.args]
    if sym.kind == "LengthOfLine":
        return dist(p[0], p[1])
    if sym.kind == "MeasureOfAngle":
        return angle_deg(p[0], p[1], p[2])
    if sym.kind == "AreaOfPolygon":
        return polygon_area(p)
    if sym.kind == "PerimeterOfPolygon":
        return sum(dist(p[i], p[(i + 1) % len(p)]) for i in range(len(p)))
    raise KeyError(sym.text)


# -- constraint templates ----------------------------------------------------

def _helper_value(s: Symbol, pts: Mapping[str, Point]) -> float:
    p = [pts[a] for a in s.args]
    if s.kind == "x":
        return p[0][0]
    if s.kind == "y":
        return p[0][1]
    if s.kind == "dist2":
        return (p[0][0] - p[1][0]) ** 2 + (p[0][1] - p[1][1]) ** 2
    if s.kind == "dot":
        a, b, c = p
        return (a[0] - b[0]) * (c[0] - b[0]) + (a[1] - b[1]) * (c[1] - b[1])
    if s.kind == "vdot":
        a, b, c, d = p
        return (b[0] - a[0]) * (d[0] - c[0]) + (b[1] - a[1]) * (d[1] - c[1])
    if s.kind == "cross":
        a, b, c, d = p
        return (b[0] - a[0]) * (d[1] - c[1]) - (b[1] - a[1]) * (d[0] - c[0])
    raise KeyError(s.text)


def _helper_expr(s: Symbol) -> Expr:
    X = lambda q: Sym(var("x_" + q))  # noqa: E731
    Y = lambda q: Sym(var("y_" + q))  # noqa: E731
    a = s.args
    if s.kind == "x":
        return X(a[0])
    if s.kind == "y":
        return Y(a[0])
    if s.kind == "dist2":
        return (X(a[0]) - X(a[1])) * (X(a[0]) - X(a[1])) + (Y(a[0]) - Y(a[1])) * (Y(a[0]) - Y(a[1]))
    if s.kind == "dot":
        return (X(a[0]) - X(a[1])) * (X(a[2]) - X(a[1])) + (Y(a[0]) - Y(a[1])) * (Y(a[2]) - Y(a[1]))
    if s.kind == "vdot":
        return (X(a[1]) - X(a[0])) * (X(a[3]) - X(a[2])) + (Y(a[1]) - Y(a[0])) * (Y(a[3]) - Y(a[2]))
    if s.kind == "cross":
        return (X(a[1]) - X(a[0])) * (Y(a[3]) - Y(a[2])) - (Y(a[1]) - Y(a[0])) * (X(a[3]) - X(a[2]))
    raise KeyError(s.text)


@lru_cache(maxsize=256)
def _template_sides(template: str) -> tuple[Expr, Expr]:
    lhs, rhs = template.split("=")
    return parse_expression(lhs, canonical=False), parse_expression(rhs, canonical=False)


def _rename(e: Expr, letters: Mapping[str, str]) -> Expr:
    return map_symbols(e, lambda s: Sym(Symbol(s.kind, tuple(letters[a] for a in s.args))))


def template_residual(template: str, letters: Mapping[str, str], pts: Mapping[str, Point]) -> float:
    lhs, rhs = _template_sides(template)
    env = lambda s: _helper_value(Symbol(s.kind, tuple(letters[a] for a in s.args)), pts)  # noqa: E731
    return evaluate_float(lhs, env) - evaluate_float(rhs, env)


@lru_cache(maxsize=4096)
def _template_fpoly(template: str, letters: tuple[tuple[str, str], ...]) -> tuple:
    lhs, rhs = _template_sides(template)
    m = dict(letters)
    expand = lambda e: map_symbols(_rename(e, m), _helper_expr)  # noqa: E731
    p = to_poly(expand(lhs)) - to_poly(expand(rhs))
    return tuple(
        (tuple((s.args[0], k) for s, k in mono), float(c)) for mono, c in p.terms.items()
    )


def template_fpoly(template: str, letters: Mapping[str, str]) -> FPoly:
    """Polynomial over coordinate variables ``x_P``/``y_P`` (float coefficients)."""
    return dict(_template_fpoly(template, tuple(sorted(letters.items()))))


def fpoly_vars(fp: FPoly) -> set[str]:
    return {v for mono in fp for v, _ in mono}


def fpoly_substitute(fp: FPoly, values: Mapping[str, float]) -> FPoly:
    out: FPoly = {}
    for mono, c in fp.items():
        rest = []
        for v, k in mono:
            if v in values:
                c *= values[v] ** k
            else:
                rest.append((v, k))
        key = tuple(rest)
        out[key] = out.get(key, 0.0) + c
    return out


def fpoly_eval(fp: FPoly, values: Mapping[str, float]) -> float:
    return fpoly_substitute(fp, values).get((), 0.0)


def between_holds(a: Point, b: Point, c: Point, tol: float = 1e-6) -> bool:
    """``b`` lies strictly inside segment ``ac``."""
    d, t = point_segment_distance(b, a, c)
    return d <= tol * max(1.0, dist(a, c)) and 0.0 < t < 1.0


# -- literal evaluation ------------------------------------------------------

def _letter_maps(pred: PredicateDef, lit: Literal):
    per_slot = []
    for slot, ent in zip(pred.slots, lit.args):
        per_slot.append([dict(zip(slot.letters, v)) for v in symmetric_variants(ent.kind, ent.points, pred.reflect)])
    orders = [per_slot]
    if pred.commutative and len(per_slot) == 2:
        # swapped arguments: slot 0 letters take slot 1's points and vice versa
        swapped = []
        for i, (slot, ent) in enumerate(zip(pred.slots, reversed(lit.args))):
            swapped.append([dict(zip(slot.letters, v)) for v in symmetric_variants(ent.kind, ent.points, pred.reflect)])
        orders.append(swapped)
    for slots in orders:
        for combo in itertools.product(*slots):
            m: dict[str, str] = {}
            for part in combo:
                m.update(part)
            yield m


def literal_holds(lit: Literal, registry: Registry, pts: Mapping[str, Point], tol: float = 1e-6) -> bool:
    """Whether the coordinates realise ``lit`` (some equivalent letter
    assignment satisfies every constraint and side condition)."""
    pred = registry.predicate(lit.predicate)
    if any(p not in pts for p in lit.points()):
        return False
    for ent in lit.args:
        if ent.kind.startswith("polygon"):
            poly = [pts[p] for p in ent.points]
            if polygon_area(poly) <= tol:
                return False
    if not pred.constraints and not pred.requires:
        return True
    for m in _letter_maps(pred, lit):
        if all(abs(template_residual(t, m, pts)) <= tol for t in pred.constraints or ()) and all(
            _requires_holds(r, m, pts) for r in pred.requires
        ):
            return True
    return False


def _requires_holds(req: str, letters: Mapping[str, str], pts: Mapping[str, Point]) -> bool:
    name, _, rest = req.partition("(")
    args = [letters[a.strip()] for a in rest.rstrip(")").split(",")]
    if name == "between":
        return between_holds(pts[args[0]], pts[args[1]], pts[args[2]])
    raise KeyError(name)


def requires_points(req: str, letters: Mapping[str, str]) -> tuple[str, ...]:
    _, _, rest = req.partition("(")
    return tuple(letters[a.strip()] for a in rest.rstrip(")").split(","))
