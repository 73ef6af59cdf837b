"""Static SVG convergence plots from summary CSVs.

One plot per distinct ``h``: the ``ratio`` statistic against eps on log axes,
with +-1 SE bars and a reference line at 1.
"""

from __future__ import annotations

import csv
import logging
import math
from pathlib import Path
from xml.sax.saxutils import escape

from .experiments import SUMMARY_HEADER

log = logging.getLogger(__name__)

__all__ = ["SchemaError", "emit_plots", "render_svg"]

W, H = 480, 320
PAD = 56


class SchemaError(ValueError):
    pass


def _f(s):
    try:
        return float(s)
    except ValueError:
        return math.nan


def render_svg(title, points) -> str:
    """``points`` is a list of (eps, ratio, se)."""
    xs = [math.log10(p[0]) for p in points]
    lo_y = [p[1] - (p[2] if math.isfinite(p[2]) else 0) for p in points]
    hi_y = [p[1] + (p[2] if math.isfinite(p[2]) else 0) for p in points]
    x0, x1 = min(xs), max(xs)
    if x1 - x0 < 1e-9:
        x0, x1 = x0 - 0.5, x1 + 0.5
    y0 = min(min(lo_y), 1.0)
    y1 = max(max(hi_y), 1.0)
    pad = 0.1 * (y1 - y0 or 1.0)
    y0, y1 = y0 - pad, y1 + pad

    def sx(v):
        return PAD + (v - x0) / (x1 - x0) * (W - 2 * PAD)

    def sy(v):
        return H - PAD - (v - y0) / (y1 - y0) * (H - 2 * PAD)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{PAD}" y1="{H - PAD}" x2="{W - PAD}" y2="{H - PAD}" stroke="black"/>',
        f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{H - PAD}" stroke="black"/>',
        f'<line x1="{PAD}" y1="{sy(1.0):.2f}" x2="{W - PAD}" y2="{sy(1.0):.2f}" stroke="gray" '
        'stroke-dasharray="4,4"/>',
        f'<text x="{W / 2:.1f}" y="{H - 12}" text-anchor="middle" font-size="12">eps (log scale)</text>',
        f'<text x="14" y="{H / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {H / 2:.1f})">ratio</text>',
    ]
    for v in (y0 + pad, 1.0, y1 - pad):
        parts.append(f'<text x="{PAD - 6}" y="{sy(v) + 4:.2f}" text-anchor="end" font-size="10">{v:.3g}</text>')
    for p, x in zip(points, xs):
        parts.append(f'<text x="{sx(x):.2f}" y="{H - PAD + 14}" text-anchor="middle" '
                     f'font-size="10">{p[0]:.3g}</text>')
    ordered = sorted(zip(xs, points))
    if len(ordered) > 1:
        pts = " ".join(f"{sx(x):.2f},{sy(p[1]):.2f}" for x, p in ordered)
        parts.append(f'<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="1.5"/>')
    for x, (e, r, se) in ordered:
        if math.isfinite(se):
            parts.append(f'<line x1="{sx(x):.2f}" y1="{sy(r - se):.2f}" x2="{sx(x):.2f}" '
                         f'y2="{sy(r + se):.2f}" stroke="steelblue"/>')
        parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(r):.2f}" r="3" fill="steelblue"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_plots(csv_path, out_dir=None) -> list[Path]:
    csv_path = Path(csv_path)
    out_dir = Path(out_dir) if out_dir else csv_path.parent
    with open(csv_path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in SUMMARY_HEADER):
            raise SchemaError(f"{csv_path}: expected summary columns {', '.join(SUMMARY_HEADER)}")
        rows = [r for r in reader if r["statistic"] == "ratio"]
    rows = [r for r in rows if _f(r["eps"]) > 0 and math.isfinite(_f(r["value"]))]
    if not rows:
        log.warning("%s: no ratio rows to plot", csv_path)
        return []
    out_dir.mkdir(parents=True, exist_ok=True)
    by_h = {}
    for r in rows:
        by_h.setdefault(r["h"], []).append((_f(r["eps"]), _f(r["value"]), _f(r["se"])))
    paths = []
    for h, pts in sorted(by_h.items(), key=lambda kv: _f(kv[0]) if kv[0] else -math.inf):
        exp = rows[0]["experiment"]
        tag = f"h{h}" if h else "all"
        path = out_dir / f"{exp}_{tag}.svg"
        title = f"{exp}  h={h}" if h else exp
        path.write_text(render_svg(title, pts))
        paths.append(path)
    return paths
