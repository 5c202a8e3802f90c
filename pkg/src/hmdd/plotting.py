"""Log-log convergence plots written directly as SVG text.

Output bytes depend only on the input numbers: coordinates are rounded to
two decimals and series keep the order in which they are given.
"""
import math
from dataclasses import dataclass

import numpy as np

from .analysis import fit_slope

WIDTH, HEIGHT = 640, 480
MARGIN = dict(left=80, right=170, top=40, bottom=60)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")
MARKERS = ("circle", "square", "triangle", "diamond")


@dataclass
class Series:
    label: str
    x: list
    y: list


def _esc(s):
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def _fmt(v):
    return "%.2f" % v


def _decades(lo, hi):
    a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    if a == b:
        a, b = a - 1, b + 1
    return a, b


class _Axes:
    def __init__(self, xs, ys):
        self.x0, self.x1 = _decades(min(xs), max(xs))
        self.y0, self.y1 = _decades(min(ys), max(ys))
        self.left, self.top = MARGIN["left"], MARGIN["top"]
        self.w = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(self, x):
        return self.left + self.w * (math.log10(x) - self.x0) / (self.x1 - self.x0)

    def py(self, y):
        return self.top + self.h * (1.0 - (math.log10(y) - self.y0) / (self.y1 - self.y0))


def _marker(kind, x, y, color):
    r = 4.0
    if kind == "circle":
        return '<circle cx="%s" cy="%s" r="%s" fill="%s"/>' % (_fmt(x), _fmt(y), _fmt(r), color)
    if kind == "square":
        return '<rect x="%s" y="%s" width="%s" height="%s" fill="%s"/>' % (
            _fmt(x - r), _fmt(y - r), _fmt(2 * r), _fmt(2 * r), color)
    if kind == "triangle":
        pts = ((x, y - r), (x - r, y + r), (x + r, y + r))
    else:
        pts = ((x, y - r), (x + r, y), (x, y + r), (x - r, y))
    return '<polygon points="%s" fill="%s"/>' % (" ".join("%s,%s" % (_fmt(a), _fmt(b)) for a, b in pts), color)


def loglog_svg(series, title="", xlabel="h", ylabel="error", reference_slopes=(), fit=True):
    """Return SVG text for a log-log plot.

    Each series with at least two positive points gets its least-squares slope
    appended to the legend entry; ``reference_slopes`` draws one slope triangle
    per value below the data.
    """
    clean = []
    for s in series:
        pts = [(float(a), float(b)) for a, b in zip(s.x, s.y)
               if a > 0 and b > 0 and np.isfinite(a) and np.isfinite(b)]
        clean.append((s.label, pts))
    allx = [p[0] for _, pts in clean for p in pts] or [1.0]
    ally = [p[1] for _, pts in clean for p in pts] or [1.0]
    tri = _triangle_specs(allx, ally, reference_slopes)
    ax = _Axes(allx, ally + [t[3] for t in tri])
    out = ['<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" viewBox="0 0 %d %d">'
           % (WIDTH, HEIGHT, WIDTH, HEIGHT),
           '<rect width="100%" height="100%" fill="white"/>',
           '<g font-family="sans-serif" font-size="12">']
    # frame and decade grid
    out.append('<rect x="%s" y="%s" width="%s" height="%s" fill="none" stroke="black"/>'
               % (_fmt(ax.left), _fmt(ax.top), _fmt(ax.w), _fmt(ax.h)))
    for k in range(ax.x0, ax.x1 + 1):
        x = ax.px(10.0 ** k)
        out.append('<line x1="%s" y1="%s" x2="%s" y2="%s" stroke="#dddddd"/>'
                   % (_fmt(x), _fmt(ax.top), _fmt(x), _fmt(ax.top + ax.h)))
        out.append('<text x="%s" y="%s" text-anchor="middle">1e%d</text>' % (_fmt(x), _fmt(ax.top + ax.h + 18), k))
    for k in range(ax.y0, ax.y1 + 1):
        y = ax.py(10.0 ** k)
        out.append('<line x1="%s" y1="%s" x2="%s" y2="%s" stroke="#dddddd"/>'
                   % (_fmt(ax.left), _fmt(y), _fmt(ax.left + ax.w), _fmt(y)))
        out.append('<text x="%s" y="%s" text-anchor="end">1e%d</text>' % (_fmt(ax.left - 6), _fmt(y + 4), k))
    out.append('<text x="%s" y="%s" text-anchor="middle">%s</text>'
               % (_fmt(ax.left + ax.w / 2), _fmt(HEIGHT - 18), _esc(xlabel)))
    out.append('<text x="18" y="%s" text-anchor="middle" transform="rotate(-90 18 %s)">%s</text>'
               % (_fmt(ax.top + ax.h / 2), _fmt(ax.top + ax.h / 2), _esc(ylabel)))
    if title:
        out.append('<text x="%s" y="24" text-anchor="middle" font-size="14">%s</text>'
                   % (_fmt(ax.left + ax.w / 2), _esc(title)))

    for k, (label, pts) in enumerate(clean):
        color = COLORS[k % len(COLORS)]
        marker = MARKERS[(k // len(COLORS)) % len(MARKERS)]
        if len(pts) > 1:
            out.append('<polyline points="%s" fill="none" stroke="%s" stroke-width="1.5"/>'
                       % (" ".join("%s,%s" % (_fmt(ax.px(a)), _fmt(ax.py(b))) for a, b in pts), color))
        for a, b in pts:
            out.append(_marker(marker, ax.px(a), ax.py(b), color))
        text = label
        if fit and len(pts) > 1:
            text = "%s (slope %.2f)" % (label, fit_slope([p[0] for p in pts], [p[1] for p in pts]))
        ly = ax.top + 14 + 18 * k
        lx = ax.left + ax.w + 12
        out.append(_marker(marker, lx + 4, ly - 4, color))
        out.append('<text x="%s" y="%s">%s</text>' % (_fmt(lx + 14), _fmt(ly), _esc(text)))

    out.extend(_triangles(ax, tri))
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _triangle_specs(xs, ys, slopes):
    """(p, xa, xb, ya, yb) per slope, below the smallest error over the smallest half decade of h."""
    if not slopes or len(set(xs)) < 2:
        return []
    xa = min(xs)
    xb = min(max(xs), xa * 10 ** 0.5)
    base = min(ys) / 3.0
    specs = []
    for k, p in enumerate(sorted(set(float(v) for v in slopes))):
        yb = base / 3.0 ** k
        specs.append((p, xa, xb, yb * (xa / xb) ** p, yb))
    return specs


def _triangles(ax, specs):
    parts = []
    for p, xa, xb, ya, yb in specs:
        X0, X1 = ax.px(xa), ax.px(xb)
        Y0, Y1 = ax.py(ya), ax.py(yb)
        parts.append('<polygon points="%s,%s %s,%s %s,%s" fill="none" stroke="#555555" stroke-dasharray="4 2"/>'
                     % (_fmt(X0), _fmt(Y0), _fmt(X1), _fmt(Y0), _fmt(X1), _fmt(Y1)))
        parts.append('<text x="%s" y="%s" fill="#555555">%.2f</text>' % (_fmt(X1 + 4), _fmt((Y0 + Y1) / 2 + 4), p))
    return parts


def write_svg(path, text):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
