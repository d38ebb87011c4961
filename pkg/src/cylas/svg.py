"""Minimal SVG 1.1 plots: axes, polylines, markers and a metadata block."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["Plot", "PALETTE"]

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


def _num(v: float) -> str:
    return f"{v:.2f}"


@dataclass
class Plot:
    """Collects series in data coordinates and renders them to a fixed frame."""

    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    logy: bool = False
    width: int = 640
    height: int = 480
    metadata: dict = field(default_factory=dict)
    _lines: list = field(default_factory=list)
    _points: list = field(default_factory=list)

    def line(self, x, y, color: str = PALETTE[0], label: str = "", dash: bool = False) -> None:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self._lines.append((x, y, color, label, dash))

    def point(self, x: float, y: float, color: str = PALETTE[1], label: str = "") -> None:
        self._points.append((float(x), float(y), color, label))

    def _ty(self, y):
        return np.log10(y) if self.logy else y

    def _limits(self):
        xs, ys = [], []
        for x, y, *_ in self._lines:
            ok = np.isfinite(x) & np.isfinite(y) & ((y > 0) if self.logy else True)
            xs.append(x[ok])
            ys.append(self._ty(y[ok]))
        for x, y, *_ in self._points:
            if not self.logy or y > 0:
                xs.append(np.array([x]))
                ys.append(np.array([self._ty(y)]))
        xa = np.concatenate(xs) if xs else np.zeros(1)
        ya = np.concatenate(ys) if ys else np.zeros(1)
        if xa.size == 0:
            xa = ya = np.zeros(1)
        x0, x1, y0, y1 = float(xa.min()), float(xa.max()), float(ya.min()), float(ya.max())
        if x1 == x0:
            x0, x1 = x0 - 1, x1 + 1
        if y1 == y0:
            y0, y1 = y0 - 1, y1 + 1
        pad = 0.03 * (y1 - y0)
        return x0, x1, y0 - pad, y1 + pad

    def render(self, timestamp: str | None = None) -> str:
        ml, mr, mt, mb = 70, 20, 40, 55
        W, H = self.width, self.height
        x0, x1, y0, y1 = self._limits()
        sx = (W - ml - mr) / (x1 - x0)
        sy = (H - mt - mb) / (y1 - y0)

        def px(x):
            return ml + (np.asarray(x) - x0) * sx

        def py(y):
            return H - mb - (np.asarray(self._ty(y)) - y0) * sy

        out = ['<?xml version="1.0" encoding="UTF-8"?>',
               f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" '
               f'viewBox="0 0 {W} {H}">']
        if timestamp:
            out.append(f"<!-- generated {escape(timestamp)} -->")
        if self.metadata:
            body = "\n".join(f"{k} = {v}" for k, v in self.metadata.items())
            out.append(f"<metadata>\n{escape(body)}\n</metadata>")
        out.append(f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>')
        out.append(f'<rect x="{ml}" y="{mt}" width="{W - ml - mr}" height="{H - mt - mb}" '
                   'fill="none" stroke="black" stroke-width="1"/>')
        for t in _nice_ticks(x0, x1):
            X = _num(float(px(t)))
            out.append(f'<line x1="{X}" y1="{H - mb}" x2="{X}" y2="{H - mb + 5}" stroke="black"/>')
            out.append(f'<text x="{X}" y="{H - mb + 18}" font-size="11" text-anchor="middle">{t:g}</text>')
        for t in _nice_ticks(y0, y1):
            Y = _num(H - mb - (t - y0) * sy)
            lab = f"1e{t:g}" if self.logy else f"{t:g}"
            out.append(f'<line x1="{ml - 5}" y1="{Y}" x2="{ml}" y2="{Y}" stroke="black"/>')
            out.append(f'<text x="{ml - 8}" y="{Y}" font-size="11" text-anchor="end" '
                       f'dominant-baseline="middle">{lab}</text>')
        if self.title:
            out.append(f'<text x="{W / 2}" y="22" font-size="14" text-anchor="middle">{escape(self.title)}</text>')
        if self.xlabel:
            out.append(f'<text x="{(W + ml - mr) / 2}" y="{H - 12}" font-size="12" '
                       f'text-anchor="middle">{escape(self.xlabel)}</text>')
        if self.ylabel:
            out.append(f'<text x="16" y="{(H + mt - mb) / 2}" font-size="12" text-anchor="middle" '
                       f'transform="rotate(-90 16 {(H + mt - mb) / 2})">{escape(self.ylabel)}</text>')
        out.append(f'<clipPath id="frame"><rect x="{ml}" y="{mt}" width="{W - ml - mr}" '
                   f'height="{H - mt - mb}"/></clipPath>')
        out.append('<g clip-path="url(#frame)" fill="none" stroke-width="1.5">')
        for x, y, color, label, dash in self._lines:
            ok = np.isfinite(x) & np.isfinite(y) & ((y > 0) if self.logy else True)
            if np.count_nonzero(ok) < 2:
                continue
            pts = " ".join(f"{_num(a)},{_num(b)}" for a, b in zip(px(x[ok]), py(y[ok])))
            style = ' stroke-dasharray="5,3"' if dash else ""
            title = f"<title>{escape(label)}</title>" if label else ""
            out.append(f'<polyline points="{pts}" stroke="{color}"{style}>{title}</polyline>')
        out.append("</g>")
        for x, y, color, label in self._points:
            if self.logy and y <= 0:
                continue
            title = f"<title>{escape(label)}</title>" if label else ""
            out.append(f'<circle cx="{_num(float(px(x)))}" cy="{_num(float(py(y)))}" r="3.5" '
                       f'fill="{color}">{title}</circle>')
        legend = [(c, lab) for *_, c, lab, _ in self._lines if lab]
        legend += [(c, lab) for *_, c, lab in self._points if lab]
        for k, (color, lab) in enumerate(dict.fromkeys(legend)):
            Y = mt + 14 + 16 * k
            out.append(f'<line x1="{W - mr - 150}" y1="{Y}" x2="{W - mr - 130}" y2="{Y}" '
                       f'stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{W - mr - 125}" y="{Y}" font-size="11" '
                       f'dominant-baseline="middle">{escape(lab)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path, timestamp: str | None = None) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(self.render(timestamp))
