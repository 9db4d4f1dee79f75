"""Dependency-free SVG emitters for heatmaps and radar charts."""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

CELL_W, CELL_H = 56, 18
LABEL_W = 170
STYLE = "font-family:Helvetica,Arial,sans-serif;font-size:11px"


def _num(x: float) -> str:
    return f"{x:.2f}"


def _gray(v: float) -> str:
    level = int(round(255 * (1.0 - min(max(v, 0.0), 1.0))))
    return f"#{level:02x}{level:02x}{level:02x}"


def _svg(width: float, height: float, body: list[str]) -> str:
    head = ('<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(width)}" '
            f'height="{_num(height)}" viewBox="0 0 {_num(width)} {_num(height)}" style="{STYLE}">')
    return "\n".join([head, *body, "</svg>"]) + "\n"


def _banner(text: str, y: float) -> str:
    return f'<text x="4" y="{_num(y)}" fill="#555555" font-size="9">{escape(text)}</text>'


def no_data_svg(title: str, banner: str) -> str:
    body = [f'<text x="10" y="20" font-weight="bold">{escape(title)}</text>',
            '<text x="10" y="50" fill="#b00000">no data</text>',
            _banner(banner, 80)]
    return _svg(360, 90, body)


def heatmap_svg(labels: Sequence[str], values, columns: Sequence, title: str, banner: str,
                separator_after: int | None = None) -> str:
    """Trait x cluster grid, linear grayscale (0 = white, 1 = black).

    ``values`` is ``len(labels) x len(columns)``; NaN cells are drawn plain
    grey. ``separator_after`` draws a rule after that many rows.
    """
    values = np.asarray(values, dtype=np.float64)
    if not len(labels) or not len(columns):
        return no_data_svg(title, banner)
    top = 44
    grid_w = CELL_W * len(columns)
    legend_y = top + CELL_H * len(labels) + 16
    height = legend_y + 56
    width = max(LABEL_W + grid_w + 10, 380)
    body = [f'<text x="4" y="16" font-weight="bold">{escape(title)}</text>']
    for j, col in enumerate(columns):
        x = LABEL_W + CELL_W * j + CELL_W / 2
        body.append(f'<text x="{_num(x)}" y="{top - 6}" text-anchor="middle">'
                    f'{escape(str(col))}</text>')
    for i, label in enumerate(labels):
        y = top + CELL_H * i
        body.append(f'<text x="{LABEL_W - 6}" y="{_num(y + CELL_H - 5)}" text-anchor="end">'
                    f'{escape(label)}</text>')
        for j in range(len(columns)):
            v = values[i, j]
            x = LABEL_W + CELL_W * j
            if np.isnan(v):
                body.append(f'<rect x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" '
                            'fill="#dddddd" stroke="#ffffff"/>')
                continue
            ink = "#ffffff" if v > 0.5 else "#000000"
            body.append(f'<rect x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" '
                        f'fill="{_gray(v)}" stroke="#ffffff"/>')
            body.append(f'<text x="{_num(x + CELL_W / 2)}" y="{_num(y + CELL_H - 5)}" '
                        f'text-anchor="middle" fill="{ink}">{100 * v:.1f}%</text>')
    if separator_after:
        y = top + CELL_H * separator_after
        body.append(f'<line x1="4" y1="{y}" x2="{LABEL_W + grid_w}" y2="{y}" '
                    'stroke="#c00000" stroke-width="1.5"/>')
    # legend: ten equal steps from 0 to 1
    steps = 10
    for s in range(steps):
        body.append(f'<rect x="{LABEL_W + 20 * s}" y="{legend_y}" width="20" height="10" '
                    f'fill="{_gray((s + 0.5) / steps)}" stroke="#888888" stroke-width="0.5"/>')
    body.append(f'<text x="{LABEL_W}" y="{legend_y + 22}">0%</text>')
    body.append(f'<text x="{LABEL_W + 20 * steps}" y="{legend_y + 22}" '
                'text-anchor="end">100%</text>')
    body.append(_banner(banner, height - 6))
    return _svg(width, height, body)


def radar_svg(labels: Sequence[str], values: Sequence[float], title: str, banner: str,
              reference: Sequence[float] | None = None) -> str:
    """Polygon radar chart on a 0..1 radial scale, axes clockwise from 12 o'clock.

    ``reference`` (e.g. the mean over all clusters) is drawn dashed behind.
    """
    vals = np.asarray(values, dtype=np.float64)
    if not len(labels) or np.isnan(vals).all():
        return no_data_svg(title, banner)
    vals = np.nan_to_num(vals)
    cx, cy, r = 260.0, 250.0, 170.0
    n = len(labels)

    def point(i, v):
        ang = -math.pi / 2 + 2 * math.pi * i / n
        return cx + r * v * math.cos(ang), cy + r * v * math.sin(ang)

    def poly(vs):
        return " ".join(f"{_num(x)},{_num(y)}" for x, y in (point(i, v) for i, v in enumerate(vs)))

    body = [f'<text x="4" y="16" font-weight="bold">{escape(title)}</text>']
    for ring in (0.25, 0.5, 0.75, 1.0):
        body.append(f'<polygon points="{poly([ring] * n)}" fill="none" stroke="#cccccc"/>')
    for i, label in enumerate(labels):
        x, y = point(i, 1.0)
        lx, ly = point(i, 1.12)
        anchor = "middle" if abs(lx - cx) < 1 else ("start" if lx > cx else "end")
        body.append(f'<line x1="{_num(cx)}" y1="{_num(cy)}" x2="{_num(x)}" y2="{_num(y)}" '
                    'stroke="#cccccc"/>')
        body.append(f'<text x="{_num(lx)}" y="{_num(ly + 4)}" text-anchor="{anchor}">'
                    f'{escape(label)}</text>')
    if reference is not None:
        ref = np.nan_to_num(np.asarray(reference, dtype=np.float64))
        body.append(f'<polygon points="{poly(ref)}" fill="none" stroke="#888888" '
                    'stroke-dasharray="4,3"/>')
    body.append(f'<polygon points="{poly(vals)}" fill="#1f78b4" fill-opacity="0.35" '
                'stroke="#1f78b4" stroke-width="1.5"/>')
    body.append(_banner(banner, 494))
    return _svg(520, 500, body)
