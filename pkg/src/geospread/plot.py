"""Self-contained SVG line charts from the package's CSV files."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from ._csv import read_columns
from .errors import ConfigurationError

WIDTH, HEIGHT = 800, 500
LEFT, RIGHT, TOP, BOTTOM = 80, 30, 30, 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


def _range(values):
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return 0.0, 1.0
    lo, hi = float(finite.min()), float(finite.max())
    if hi == lo:
        pad = abs(lo) * 0.05 or 1.0
        return lo - pad, hi + pad
    return lo, hi


def _segments(xs, ys):
    """Split a series at non-finite points."""
    ok = np.isfinite(xs) & np.isfinite(ys)
    seg = []
    for x, y, good in zip(xs, ys, ok):
        if good:
            seg.append((x, y))
        elif seg:
            yield seg
            seg = []
    if seg:
        yield seg


def render_svg(x, series, x_label, y_label) -> str:
    """SVG text for one x array and a dict label -> y array."""
    x = np.asarray(x, dtype=float)
    x0, x1 = _range(x)
    y0, y1 = _range(np.concatenate([np.asarray(v, dtype=float) for v in series.values()]))
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(v):
        return LEFT + (v - x0) / (x1 - x0) * pw

    def py(v):
        return TOP + (y1 - v) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
           f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" '
           'fill="none" stroke="black"/>']
    for frac in np.linspace(0.0, 1.0, 5):
        xv = x0 + frac * (x1 - x0)
        yv = y0 + frac * (y1 - y0)
        out.append(f'<line x1="{px(xv):.2f}" y1="{TOP + ph}" x2="{px(xv):.2f}" '
                   f'y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px(xv):.2f}" y="{TOP + ph + 20}" font-size="12" '
                   f'text-anchor="middle">{xv:.4g}</text>')
        out.append(f'<line x1="{LEFT - 5}" y1="{py(yv):.2f}" x2="{LEFT}" '
                   f'y2="{py(yv):.2f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{py(yv) + 4:.2f}" font-size="12" '
                   f'text-anchor="end">{yv:.4g}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 15}" font-size="14" '
               f'text-anchor="middle">{escape(x_label)}</text>')
    out.append(f'<text x="18" y="{TOP + ph / 2:.1f}" font-size="14" '
               f'text-anchor="middle" transform="rotate(-90 18 {TOP + ph / 2:.1f})">'
               f'{escape(y_label)}</text>')
    for i, (label, y) in enumerate(series.items()):
        color = COLORS[i % len(COLORS)]
        for seg in _segments(x, np.asarray(y, dtype=float)):
            pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in seg)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                       f'points="{pts}"><title>{escape(label)}</title></polyline>')
    if len(series) > 1:
        out.append('<g class="legend">')
        for i, label in enumerate(series):
            ly = TOP + 15 + 18 * i
            color = COLORS[i % len(COLORS)]
            out.append(f'<line x1="{LEFT + pw - 150}" y1="{ly}" x2="{LEFT + pw - 125}" '
                       f'y2="{ly}" stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{LEFT + pw - 118}" y="{ly + 4}" font-size="12">'
                       f'{escape(label)}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(csv_path, x_column, y_columns, out_path=None) -> str:
    """Plot columns of a CSV file; returns the path written."""
    if isinstance(y_columns, str):
        y_columns = [c for c in y_columns.split(",") if c]
    if not y_columns:
        raise ConfigurationError("no y columns given", field="plot.y")
    header, data = read_columns(csv_path)
    for col in [x_column, *y_columns]:
        if col not in data:
            raise ConfigurationError(f"missing column {col!r}; have {header}",
                                     field="plot.columns")
    if len(data[x_column]) == 0:
        raise ConfigurationError("no data rows", field="plot.csv")
    series = {c: data[c] for c in y_columns}
    svg = render_svg(data[x_column], series, x_column, ", ".join(y_columns))
    out_path = str(csv_path)[:-4] + ".svg" if out_path is None else out_path
    with open(out_path, "w") as fh:
        fh.write(svg)
    return str(out_path)
