"""Minimal static SVG line plots (polylines, framed axes, optional log scales)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class Series:
    label: str
    x: list[float]
    y: list[float]
    marker: bool = True


@dataclass
class LinePlot:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    logx: bool = False
    logy: bool = False
    width: int = 560
    height: int = 400
    series: list[Series] = field(default_factory=list)

    def add(self, label: str, x, y, marker: bool = True) -> LinePlot:
        self.series.append(Series(label, [float(v) for v in x], [float(v) for v in y], marker))
        return self

    def _tx(self, v, log):
        return math.log10(v) if log else v

    def _range(self, vals, log):
        vals = [self._tx(v, log) for v in vals if math.isfinite(v) and (v > 0 or not log)]
        if not vals:
            return 0.0, 1.0
        lo, hi = min(vals), max(vals)
        if hi == lo:
            lo, hi = lo - 0.5, hi + 0.5
        pad = 0.05 * (hi - lo)
        return lo - pad, hi + pad

    def to_svg(self) -> str:
        left, right, top, bottom = 70, 20, 30, 50
        pw, ph = self.width - left - right, self.height - top - bottom
        xs = [v for s in self.series for v in s.x]
        ys = [v for s in self.series for v in s.y]
        x0, x1 = self._range(xs, self.logx)
        y0, y1 = self._range(ys, self.logy)

        def px(v):
            return left + (self._tx(v, self.logx) - x0) / (x1 - x0) * pw

        def py(v):
            return top + ph - (self._tx(v, self.logy) - y0) / (y1 - y0) * ph

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'font-family="sans-serif" font-size="11">',
            f'<rect x="0" y="0" width="{self.width}" height="{self.height}" fill="white"/>',
            f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        ]
        for lo, hi, log, horizontal in ((x0, x1, self.logx, True), (y0, y1, self.logy, False)):
            for tick in _ticks(lo, hi, log):
                label = f"1e{int(tick)}" if log else f"{tick:.3g}"
                if horizontal:
                    p = left + (tick - lo) / (hi - lo) * pw
                    out.append(f'<line x1="{p:.2f}" y1="{top + ph}" x2="{p:.2f}" y2="{top + ph + 4}" stroke="black"/>')
                    out.append(f'<text x="{p:.2f}" y="{top + ph + 16}" text-anchor="middle">{label}</text>')
                else:
                    p = top + ph - (tick - lo) / (hi - lo) * ph
                    out.append(f'<line x1="{left - 4}" y1="{p:.2f}" x2="{left}" y2="{p:.2f}" stroke="black"/>')
                    out.append(f'<text x="{left - 6}" y="{p + 4:.2f}" text-anchor="end">{label}</text>')
        out.append(f'<text x="{self.width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(self.title)}</text>')
        out.append(f'<text x="{left + pw / 2:.1f}" y="{self.height - 10}" text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 14 {top + ph / 2:.1f})">{escape(self.ylabel)}</text>')
        for i, s in enumerate(self.series):
            color = COLORS[i % len(COLORS)]
            pts = [(px(a), py(b)) for a, b in zip(s.x, s.y)
                   if math.isfinite(a) and math.isfinite(b)
                   and (a > 0 or not self.logx) and (b > 0 or not self.logy)]
            if pts:
                coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
                out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
                if s.marker:
                    out += [f'<circle cx="{a:.2f}" cy="{b:.2f}" r="2.5" fill="{color}"/>' for a, b in pts]
            ly = top + 14 + 14 * i
            out.append(f'<line x1="{left + 8}" y1="{ly - 4}" x2="{left + 24}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{left + 28}" y="{ly}">{escape(s.label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def _ticks(lo: float, hi: float, log: bool, target: int = 5) -> list[float]:
    if log:
        return [float(k) for k in range(math.ceil(lo), math.floor(hi) + 1)]
    raw = (hi - lo) / target
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=mag)
    start = math.ceil(lo / step) * step
    n = int(math.floor((hi - start) / step)) + 1
    return [start + i * step for i in range(n)]
