"""Hand-written coordinate checks for every sampled predicate, independent
of the registry's constraint templates."""

import numpy as np


def _v(pts, p):
    return np.asarray(pts[p], dtype=float)


def _cross(u, w):
    return float(u[0] * w[1] - u[1] * w[0])


def _d2(a, b):
    return float(np.dot(a - b, a - b))


def residuals(pred, args, pts):
    """Residuals that must all vanish for ``pred(args)`` to hold."""
    P = lambda s: [_v(pts, c) for c in split(s)]  # noqa: E731
    if pred == "Line":
        return [0.0]
    if pred == "Triangle":
        return []
    if pred == "Collinear":
        a, m, b = P(args[0])
        return [_cross(b - a, m - a)]
    if pred == "RightTriangle":
        a, b, c = P(args[0])
        return [float(np.dot(a - b, c - b))]
    if pred == "IsoscelesTriangle":
        a, b, c = P(args[0])
        return [_d2(b, a) - _d2(b, c)]
    if pred == "EquilateralTriangle":
        a, b, c = P(args[0])
        return [_d2(a, b) - _d2(b, c), _d2(b, c) - _d2(c, a)]
    if pred in ("Parallelogram", "Rectangle", "Rhombus", "Square"):
        a, b, c, d = P(args[0])
        out = list(a + c - b - d)
        if pred in ("Rectangle", "Square"):
            out.append(float(np.dot(a - b, c - b)))
        if pred in ("Rhombus", "Square"):
            out.append(_d2(a, b) - _d2(b, c))
        return out
    if pred == "IsMidpointOfLine":
        [m], (a, b) = P(args[0]), P(args[1])
        return list(m - (a + b) / 2)
    if pred == "IsPerpendicularFoot":
        [d], [a], (b, c) = P(args[0]), P(args[1]), P(args[2])
        return [_cross(c - b, d - b), float(np.dot(a - d, c - b))]
    if pred == "ParallelBetweenLine":
        (a, b), (c, d) = P(args[0]), P(args[1])
        return [_cross(b - a, d - c)]
    if pred == "PerpendicularBetweenLine":
        (a, b), (c, d) = P(args[0]), P(args[1])
        return [float(np.dot(b - a, d - c))]
    if pred == "IsIntersectionOfLines":
        [o], (a, c), (b, d) = P(args[0]), P(args[1]), P(args[2])
        return [_cross(c - a, o - a), _cross(d - b, o - b)]
    if pred == "IsCircumcenterOfTriangle":
        [o], (a, b, c) = P(args[0]), P(args[1])
        return [_d2(o, a) - _d2(o, b), _d2(o, a) - _d2(o, c)]
    if pred == "IsMidsegmentOfTriangle":
        (d, e), (a, b, c) = P(args[0]), P(args[1])
        return list(d - (a + b) / 2) + list(e - (a + c) / 2)
    raise KeyError(pred)


def split(s):
    import re
    return re.findall(r"[A-Z][0-9]*", s)


def max_residual(literal_text, pts):
    import re
    m = re.fullmatch(r"(\w+)\((.*)\)", literal_text)
    pred, args = m.group(1), m.group(2).split(",")
    r = residuals(pred, args, pts)
    return max((abs(x) for x in r), default=0.0)
