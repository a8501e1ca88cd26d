"""Minimal SVG 1.1 line-chart writer.

Only what the experiments need: panels with polylines, dashed vertical
markers, point markers and text.  Coordinates are printed with fixed
precision so identical data always produces identical bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
           "#bcbd22", "#17becf", "#d62728"]


def _f(v):
    return f"{v:.2f}"


@dataclass
class Panel:
    x: float
    y: float
    width: float
    height: float
    xlim: tuple
    ylim: tuple
    title: str = ""
    xlog: bool = False
    ylog: bool = False
    items: list = field(default_factory=list)

    def _tx(self, v):
        lo, hi = self.xlim
        if self.xlog:
            v, lo, hi = math.log10(v), math.log10(lo), math.log10(hi)
        return self.x + (v - lo) / (hi - lo) * self.width

    def _ty(self, v):
        lo, hi = self.ylim
        if self.ylog:
            v, lo, hi = math.log10(v), math.log10(lo), math.log10(hi)
        return self.y + self.height - (v - lo) / (hi - lo) * self.height

    def line(self, xs, ys, color="#1f77b4", width=1.0, dash=None, opacity=1.0):
        pts = " ".join(f"{_f(self._tx(a))},{_f(self._ty(b))}" for a, b in zip(xs, ys))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        if opacity != 1.0:
            extra += f' stroke-opacity="{opacity:g}"'
        self.items.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="{width:g}"{extra} points="{pts}"/>'
        )

    def vline(self, xv, color="#d62728", dash="4,3"):
        if not self.xlim[0] <= xv <= self.xlim[1]:
            return
        px = _f(self._tx(xv))
        self.items.append(
            f'<line x1="{px}" y1="{_f(self.y)}" x2="{px}" y2="{_f(self.y + self.height)}" '
            f'stroke="{color}" stroke-width="1" stroke-dasharray="{dash}"/>'
        )

    def hline(self, yv, color="#999999"):
        if not self.ylim[0] <= yv <= self.ylim[1]:
            return
        py = _f(self._ty(yv))
        self.items.append(
            f'<line x1="{_f(self.x)}" y1="{py}" x2="{_f(self.x + self.width)}" y2="{py}" '
            f'stroke="{color}" stroke-width="0.5"/>'
        )

    def marker(self, xv, yv, color="#d62728", r=3.0):
        self.items.append(
            f'<circle cx="{_f(self._tx(xv))}" cy="{_f(self._ty(yv))}" r="{r:g}" fill="{color}"/>'
        )

    def render(self):
        out = [f'<rect x="{_f(self.x)}" y="{_f(self.y)}" width="{_f(self.width)}" '
               f'height="{_f(self.height)}" fill="none" stroke="#000000" stroke-width="0.8"/>']
        if self.title:
            out.append(_text(self.x + self.width / 2, self.y - 6, self.title, anchor="middle"))
        fmt = "{:.3g}"
        out.append(_text(self.x, self.y + self.height + 14, fmt.format(self.xlim[0]), anchor="start"))
        out.append(_text(self.x + self.width, self.y + self.height + 14,
                         fmt.format(self.xlim[1]), anchor="end"))
        out.append(_text(self.x - 4, self.y + self.height, fmt.format(self.ylim[0]), anchor="end"))
        out.append(_text(self.x - 4, self.y + 10, fmt.format(self.ylim[1]), anchor="end"))
        out.append(f'<g clip-path="url(#{self.clip_id})">')
        out.extend(self.items)
        out.append("</g>")
        return out

    @property
    def clip_id(self):
        return f"clip{int(self.x)}_{int(self.y)}"


def _text(x, y, s, anchor="start", size=11):
    return (f'<text x="{_f(x)}" y="{_f(y)}" font-family="sans-serif" font-size="{size}" '
            f'text-anchor="{anchor}">{escape(s)}</text>')


class Figure:
    def __init__(self, width, height, title=""):
        self.width = width
        self.height = height
        self.title = title
        self.panels = []

    def panel(self, *args, **kw):
        p = Panel(*args, **kw)
        self.panels.append(p)
        return p

    def to_string(self):
        lines = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">',
            '<rect width="100%" height="100%" fill="#ffffff"/>',
            "<defs>",
        ]
        for p in self.panels:
            lines.append(f'<clipPath id="{p.clip_id}"><rect x="{_f(p.x)}" y="{_f(p.y)}" '
                         f'width="{_f(p.width)}" height="{_f(p.height)}"/></clipPath>')
        lines.append("</defs>")
        if self.title:
            lines.append(_text(self.width / 2, 20, self.title, anchor="middle", size=14))
        for p in self.panels:
            lines.extend(p.render())
        lines.append("</svg>")
        return "\n".join(lines) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_string())


def padded_limits(lo, hi, pad=0.05):
    if hi <= lo:
        return lo - 1.0, hi + 1.0
    span = hi - lo
    return lo - pad * span, hi + pad * span
