"""Per-feature shape export as CSV, JSON or standalone SVG step plots."""

from __future__ import annotations

import csv
import json
import re
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .gam import AdditiveModel

# SVG layout, pixels
WIDTH, HEIGHT = 640, 400
PLOT_LEFT, PLOT_RIGHT = 70.0, 500.0
PLOT_TOP, PLOT_BOTTOM = 40.0, 340.0
MAX_TICKS = 8
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _stem(i: int, name: str) -> str:
    return f"{i:03d}_{re.sub(r'[^A-Za-z0-9_.-]+', '_', name) or 'feature'}"


def value_range(values: np.ndarray) -> tuple[float, float]:
    lo, hi = float(values.min()), float(values.max())
    if hi - lo < 1e-300:
        lo, hi = lo - 1.0, hi + 1.0
    return lo, hi


def y_pixel(v: float, lo: float, hi: float) -> float:
    return PLOT_BOTTOM - (v - lo) / (hi - lo) * (PLOT_BOTTOM - PLOT_TOP)


def x_pixel(b: float, n_bins: int) -> float:
    return PLOT_LEFT + b * (PLOT_RIGHT - PLOT_LEFT) / n_bins


def step_points(values: np.ndarray, lo: float, hi: float) -> list[tuple[float, float]]:
    """Polyline vertices: a horizontal segment across each bin, vertical at each jump."""
    n = len(values)
    pts = []
    for b, v in enumerate(values):
        y = y_pixel(float(v), lo, hi)
        pts.append((x_pixel(b, n), y))
        pts.append((x_pixel(b + 1, n), y))
    return pts


def _tick_label(model: AdditiveModel, i: int, b: int) -> str:
    spec = model.bins[i]
    if spec.discrete:
        return spec.categories[b]
    return f"{spec.bin_bounds(b)[0]:.4g}"


def render_svg(model: AdditiveModel, i: int) -> str:
    spec = model.bins[i]
    vals = model.shapes[i]
    n = spec.bin_count
    lo, hi = value_range(vals)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}">',
           '<rect width="100%" height="100%" fill="white"/>',
           f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="15" font-family="sans-serif">'
           f'{escape(spec.name)}</text>',
           f'<line class="axis" x1="{PLOT_LEFT}" y1="{PLOT_BOTTOM}" x2="{PLOT_RIGHT}" y2="{PLOT_BOTTOM}" stroke="black"/>',
           f'<line class="axis" x1="{PLOT_LEFT}" y1="{PLOT_TOP}" x2="{PLOT_LEFT}" y2="{PLOT_BOTTOM}" stroke="black"/>']
    for v in (lo, (lo + hi) / 2, hi):
        y = y_pixel(v, lo, hi)
        out.append(f'<text x="{PLOT_LEFT - 6}" y="{y + 4:.3f}" text-anchor="end" font-size="10" '
                   f'font-family="sans-serif">{v:.4g}</text>')
    if 0 < -lo / (hi - lo) < 1:
        y0 = y_pixel(0.0, lo, hi)
        out.append(f'<line x1="{PLOT_LEFT}" y1="{y0:.3f}" x2="{PLOT_RIGHT}" y2="{y0:.3f}" '
                   'stroke="#cccccc" stroke-dasharray="4,3"/>')
    step = max(1, int(np.ceil(n / MAX_TICKS)))
    for b in range(0, n, step):
        x = x_pixel(b + 0.5, n) if spec.discrete else x_pixel(b, n)
        out.append(f'<text x="{x:.3f}" y="{PLOT_BOTTOM + 16}" text-anchor="middle" font-size="10" '
                   f'font-family="sans-serif">{escape(_tick_label(model, i, b))}</text>')
    out.append(f'<text x="{(PLOT_LEFT + PLOT_RIGHT) / 2}" y="{HEIGHT - 12}" text-anchor="middle" '
               f'font-size="12" font-family="sans-serif">{escape(spec.name)}</text>')
    out.append(f'<text x="16" y="{(PLOT_TOP + PLOT_BOTTOM) / 2}" text-anchor="middle" font-size="12" '
               f'font-family="sans-serif" transform="rotate(-90 16 {(PLOT_TOP + PLOT_BOTTOM) / 2})">'
               'logit contribution</text>')
    for k, label in enumerate(model.labels):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{x:.3f},{y:.3f}" for x, y in step_points(vals[:, k], lo, hi))
        out.append(f'<polyline class="shape" data-class="{k}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5" points="{pts}"/>')
        ly = PLOT_TOP + 14 * k + 6
        out.append(f'<line x1="{PLOT_RIGHT + 15}" y1="{ly}" x2="{PLOT_RIGHT + 35}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text class="legend" x="{PLOT_RIGHT + 40}" y="{ly + 4}" font-size="11" '
                   f'font-family="sans-serif">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def shape_rows(model: AdditiveModel, i: int) -> tuple[list[str], list[list]]:
    spec = model.bins[i]
    cls_cols = [f"class_{k + 1}" for k in range(model.n_classes)]
    vals = model.shapes[i]
    if spec.discrete:
        return ["category"] + cls_cols, [[c] + vals[b].tolist() for b, c in enumerate(spec.categories)]
    rows = []
    for b in range(spec.bin_count):
        lo, hi = spec.bin_bounds(b)
        rows.append([lo, hi] + vals[b].tolist())
    return ["bin_low", "bin_high"] + cls_cols, rows


def export_shapes(model: AdditiveModel, out_dir, fmt: str = "csv") -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for i, spec in enumerate(model.bins):
        path = out_dir / f"{_stem(i, spec.name)}.{fmt}"
        if fmt == "csv":
            header, rows = shape_rows(model, i)
            with open(path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(header)
                for r in rows:
                    w.writerow([repr(v) if isinstance(v, float) else v for v in r])
        elif fmt == "json":
            doc = spec.to_dict()
            doc["labels"] = list(model.labels)
            doc["values"] = model.shapes[i].T.tolist()
            path.write_text(json.dumps(doc, allow_nan=False) + "\n", encoding="utf-8")
        elif fmt == "svg":
            path.write_text(render_svg(model, i), encoding="utf-8")
        else:
            raise ValueError(f"unknown format {fmt!r}")
        written.append(path)
    return written
