"""Small dependency-free SVG writer for phase-plane plots.

Output is a pure function of the inputs: coordinates are printed with a
fixed number of decimals and elements are emitted in call order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f", "#17becf")


@dataclass
class _Series:
    x: np.ndarray
    y: np.ndarray
    label: str
    color: str
    dashed: bool
    width: float


@dataclass
class PhasePlot:
    title: str = ""
    xlabel: str = "S"
    ylabel: str = "x"
    width: int = 640
    height: int = 480
    max_points: int = 2000
    series: list[_Series] = field(default_factory=list)

    _margin = (70, 30, 40, 55)  # left, right, top, bottom

    def add(self, x, y, label="", color=None, dashed=False, width=1.0):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        x, y = x[keep], y[keep]
        if len(x) > self.max_points:
            idx = np.unique(np.linspace(0, len(x) - 1, self.max_points).round().astype(int))
            x, y = x[idx], y[idx]
        if color is None:
            color = PALETTE[len(self.series) % len(PALETTE)]
        self.series.append(_Series(x, y, label, color, dashed, width))

    def _bounds(self):
        xs = np.concatenate([s.x for s in self.series]) if self.series else np.array([0.0, 1.0])
        ys = np.concatenate([s.y for s in self.series]) if self.series else np.array([0.0, 1.0])
        x0, x1 = float(xs.min()), float(xs.max())
        y0, y1 = float(ys.min()), float(ys.max())
        if x1 - x0 < 1e-12:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 - y0 < 1e-12:
            y0, y1 = y0 - 0.5, y1 + 0.5
        px, py = 0.05 * (x1 - x0), 0.05 * (y1 - y0)
        return x0 - px, x1 + px, y0 - py, y1 + py

    def render(self) -> str:
        ml, mr, mt, mb = self._margin
        W, H = self.width, self.height
        pw, ph = W - ml - mr, H - mt - mb
        x0, x1, y0, y1 = self._bounds()

        def sx(v):
            return ml + (v - x0) / (x1 - x0) * pw

        def sy(v):
            return mt + ph - (v - y0) / (y1 - y0) * ph

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
            f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
            f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black" stroke-width="1"/>',
        ]
        for v in np.linspace(x0, x1, 6):
            X = sx(v)
            out.append(f'<line x1="{X:.2f}" y1="{mt + ph}" x2="{X:.2f}" y2="{mt + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{X:.2f}" y="{mt + ph + 18}" font-size="11" text-anchor="middle">{v:.3g}</text>')
        for v in np.linspace(y0, y1, 6):
            Y = sy(v)
            out.append(f'<line x1="{ml - 5}" y1="{Y:.2f}" x2="{ml}" y2="{Y:.2f}" stroke="black"/>')
            out.append(f'<text x="{ml - 8}" y="{Y + 4:.2f}" font-size="11" text-anchor="end">{v:.3g}</text>')
        out.append(f'<text x="{ml + pw / 2:.1f}" y="{H - 12}" font-size="13" text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(f'<text x="16" y="{mt + ph / 2:.1f}" font-size="13" text-anchor="middle" '
                   f'transform="rotate(-90 16 {mt + ph / 2:.1f})">{escape(self.ylabel)}</text>')
        if self.title:
            out.append(f'<text x="{W / 2:.1f}" y="24" font-size="14" text-anchor="middle">{escape(self.title)}</text>')
        for s in self.series:
            pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(s.x, s.y))
            dash = ' stroke-dasharray="6,4"' if s.dashed else ""
            out.append(f'<polyline points="{pts}" fill="none" stroke="{s.color}" '
                       f'stroke-width="{s.width}"{dash}/>')
        labelled = [s for s in self.series if s.label]
        for i, s in enumerate(labelled):
            ly = mt + 14 + 16 * i
            lx = ml + pw - 150
            dash = ' stroke-dasharray="6,4"' if s.dashed else ""
            out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" y2="{ly - 4}" stroke="{s.color}" '
                       f'stroke-width="{max(s.width, 1.5)}"{dash}/>')
            out.append(f'<text x="{lx + 30}" y="{ly}" font-size="11">{escape(s.label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.render())
