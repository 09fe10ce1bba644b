"""Deterministic SVG rendering (PNG is rasterised from the same layout)."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

from geogen.plotter.diagram import Diagram


@dataclass(frozen=True)
class RenderSettings:
    stroke_width: float = 1.6
    dot_radius: float = 2.6
    font_size: int = 15
    label_distance: float = 13.0
    png_scale: float = 1.0


def _layout(d: Diagram):
    """Canvas positions for points, circle radii in pixels and label anchors."""
    xs = [p[0] for p in d.points.values()]
    ys = [p[1] for p in d.points.values()]
    for c in d.circles:
        r = d.radius(c)
        cx, cy = d.points[c[0]]
        xs += [cx - r, cx + r]
        ys += [cy - r, cy + r]
    cv = d.canvas
    if not xs:
        return {}, 1.0, (lambda x, y: (x, y))
    w = max(max(xs) - min(xs), 1e-9)
    h = max(max(ys) - min(ys), 1e-9)
    s = min((cv.width - 2 * cv.margin) / w, (cv.height - 2 * cv.margin) / h)
    ox = (cv.width - s * w) / 2 - s * min(xs)
    oy = (cv.height - s * h) / 2 + s * max(ys)

    def tf(x: float, y: float) -> tuple[float, float]:
        return ox + s * x, oy - s * y

    return {k: tf(*v) for k, v in d.points.items()}, s, tf


def label_offsets(d: Diagram, pos: dict[str, tuple[float, float]], dist: float) -> dict[str, tuple[float, float]]:
    """Push each label away from the segments at its point and nearby points."""
    out = {}
    for p in d.point_names():
        x, y = pos[p]
        vx = vy = 0.0
        nbrs = [b if a == p else a for a, b in d.segments if p in (a, b)]
        for q in nbrs:
            dx, dy = pos[q][0] - x, pos[q][1] - y
            n = math.hypot(dx, dy) or 1.0
            vx -= dx / n
            vy -= dy / n
        for q, (qx, qy) in pos.items():
            if q == p:
                continue
            dx, dy = qx - x, qy - y
            n = math.hypot(dx, dy)
            if 0 < n < 4 * dist:
                vx -= dx / n * (4 * dist - n) / (4 * dist)
                vy -= dy / n * (4 * dist - n) / (4 * dist)
        n = math.hypot(vx, vy)
        if n < 1e-6:
            vx, vy, n = 1.0, -1.0, math.sqrt(2)
        out[p] = (x + dist * vx / n, y + dist * vy / n)
    return out


def render_svg(d: Diagram, settings: RenderSettings | None = None) -> bytes:
    st = settings or RenderSettings()
    pos, scale, _ = _layout(d)
    cv = d.canvas
    f = lambda v: f"{v:.2f}"  # noqa: E731
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{cv.width}" height="{cv.height}" '
        f'viewBox="0 0 {cv.width} {cv.height}">',
        f'<rect x="0" y="0" width="{cv.width}" height="{cv.height}" fill="white"/>',
        f'<g stroke="black" stroke-width="{f(st.stroke_width)}" stroke-linecap="round" fill="none">',
    ]
    for a, b in d.segments:
        (x1, y1), (x2, y2) = pos[a], pos[b]
        out.append(f'<line x1="{f(x1)}" y1="{f(y1)}" x2="{f(x2)}" y2="{f(y2)}"/>')
    for c in d.circles:
        cx, cy = pos[c[0]]
        out.append(f'<circle cx="{f(cx)}" cy="{f(cy)}" r="{f(d.radius(c) * scale)}"/>')
    out.append("</g>")
    out.append('<g fill="black">')
    for p in d.point_names():
        x, y = pos[p]
        out.append(f'<circle cx="{f(x)}" cy="{f(y)}" r="{f(st.dot_radius)}"/>')
    out.append("</g>")
    out.append(f'<g font-family="sans-serif" font-size="{st.font_size}" text-anchor="middle" dominant-baseline="central">')
    for p, (x, y) in label_offsets(d, pos, st.label_distance).items():
        out.append(f'<text x="{f(x)}" y="{f(y)}">{escape(p)}</text>')
    out.append("</g>")
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("utf-8")


def render_png(d: Diagram, settings: RenderSettings | None = None) -> bytes:
    """Raster version of :func:`render_svg` (needs Pillow)."""
    from PIL import Image, ImageDraw, ImageFont

    st = settings or RenderSettings()
    k = st.png_scale
    pos, scale, _ = _layout(d)
    cv = d.canvas
    img = Image.new("RGB", (int(cv.width * k), int(cv.height * k)), "white")
    dr = ImageDraw.Draw(img)
    sw = max(1, round(st.stroke_width * k))
    for a, b in d.segments:
        (x1, y1), (x2, y2) = pos[a], pos[b]
        dr.line([(x1 * k, y1 * k), (x2 * k, y2 * k)], fill="black", width=sw)
    for c in d.circles:
        cx, cy = pos[c[0]]
        r = d.radius(c) * scale
        dr.ellipse([(cx - r) * k, (cy - r) * k, (cx + r) * k, (cy + r) * k], outline="black", width=sw)
    for p in d.point_names():
        x, y = pos[p]
        r = st.dot_radius
        dr.ellipse([(x - r) * k, (y - r) * k, (x + r) * k, (y + r) * k], fill="black")
    try:
        font = ImageFont.load_default(size=max(8, int(st.font_size * k)))
    except TypeError:  # older Pillow without sized default font
        font = ImageFont.load_default()
    for p, (x, y) in label_offsets(d, pos, st.label_distance).items():
        dr.text((x * k, y * k), p, fill="black", font=font, anchor="mm")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()
