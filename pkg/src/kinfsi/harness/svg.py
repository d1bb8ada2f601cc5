"""Minimal log-log line plots written as standalone SVG."""
from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def loglog_svg(series: dict, title: str = "", xlabel: str = "", ylabel: str = "",
               width: int = 480, height: int = 360) -> str:
    """``series`` maps a label to a list of ``(x, y)``; nonpositive points are dropped."""
    pts = {k: [(x, y) for x, y in v if x > 0 and y > 0] for k, v in series.items()}
    allp = [p for v in pts.values() for p in v]
    left, right, top, bottom = 60, 130, 30, 45
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle">{escape(title)}</text>',
    ]
    pw, ph = width - left - right, height - top - bottom
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    if allp:
        lx = [math.log10(x) for x, _ in allp]
        ly = [math.log10(y) for _, y in allp]
        x0, x1 = min(lx), max(lx)
        y0, y1 = min(ly), max(ly)
        x1 = x1 if x1 > x0 else x0 + 1.0
        y1 = y1 if y1 > y0 else y0 + 1.0

        def sx(x):
            return left + (math.log10(x) - x0) / (x1 - x0) * pw

        def sy(y):
            return top + ph - (math.log10(y) - y0) / (y1 - y0) * ph

        for i, (label, v) in enumerate(sorted(pts.items())):
            if not v:
                continue
            c = COLORS[i % len(COLORS)]
            v = sorted(v)
            path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in v)
            out.append(f'<polyline points="{path}" fill="none" stroke="{c}" stroke-width="1.5"/>')
            for x, y in v:
                out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="2.5" fill="{c}"/>')
            ly_ = top + 14 * (i + 1)
            out.append(f'<line x1="{width - right + 8}" y1="{ly_ - 4}" x2="{width - right + 24}" y2="{ly_ - 4}" stroke="{c}"/>')
            out.append(f'<text x="{width - right + 28}" y="{ly_}">{escape(label)}</text>')
        out.append(f'<text x="{left}" y="{top + ph + 14}">{10**x0:.3g}</text>')
        out.append(f'<text x="{left + pw}" y="{top + ph + 14}" text-anchor="end">{10**x1:.3g}</text>')
        out.append(f'<text x="{left - 4}" y="{top + ph}" text-anchor="end">{10**y0:.3g}</text>')
        out.append(f'<text x="{left - 4}" y="{top + 8}" text-anchor="end">{10**y1:.3g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {top + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_loglog_svg(path, series: dict, **kw) -> None:
    Path(path).write_text(loglog_svg(series, **kw))
