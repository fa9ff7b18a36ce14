"""Static SVG figures written by hand so output bytes depend only on inputs."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .world import Circle, Environment2D, Square

__all__ = ["trajectory_svg", "curves_svg"]

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _f(x: float) -> str:
    return f"{x:.3f}"


def trajectory_svg(env: Environment2D, trajectories, free=None, best=None, task=None, size: int = 480) -> str:
    """Top-down view of the workspace with every trajectory as one polyline.

    Obstacles carry ``class="obstacle"``; collision-free paths are drawn in
    blue, colliding ones in grey, and the ``best`` path thicker on top.
    """
    (x0, x1), (y0, y1) = env.limits
    sx = size / (x1 - x0)
    sy = size / (y1 - y0)

    def px(x, y):
        return (x - x0) * sx, (y1 - y) * sy

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect class="frame" x="0" y="0" width="{size}" height="{size}" fill="white" stroke="black"/>',
    ]
    for s in env.shapes:
        cx, cy = px(*s.center)
        if isinstance(s, Circle):
            out.append(f'<circle class="obstacle" cx="{_f(cx)}" cy="{_f(cy)}" r="{_f(s.radius * sx)}" fill="#555555"/>')
        elif isinstance(s, Square):
            w = 2 * s.half_width
            out.append(f'<rect class="obstacle" x="{_f(cx - s.half_width * sx)}" y="{_f(cy - s.half_width * sy)}" '
                       f'width="{_f(w * sx)}" height="{_f(w * sy)}" fill="#555555"/>')
    trajs = np.asarray(trajectories, dtype=np.float64)
    if trajs.ndim == 2:
        trajs = trajs[None]
    free = np.ones(len(trajs), dtype=bool) if free is None else np.asarray(free, dtype=bool)
    order = [i for i in range(len(trajs)) if i != best] + ([best] if best is not None else [])
    for i in order:
        pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in (px(x, y) for x, y in trajs[i, :, :2]))
        colour = "#1f77b4" if free[i] else "#aaaaaa"
        width = 2.5 if i == best else 0.8
        out.append(f'<polyline class="trajectory" points="{pts}" fill="none" stroke="{colour}" '
                   f'stroke-width="{width}" stroke-opacity="0.8"/>')
    if task is not None:
        for (x, y), colour in ((task.start, "#2ca02c"), (task.goal, "#d62728")):
            cx, cy = px(x, y)
            out.append(f'<circle class="marker" cx="{_f(cx)}" cy="{_f(cy)}" r="4" fill="{colour}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def curves_svg(series: dict, title: str = "", xlabel: str = "iteration", ylabel: str = "",
               width: int = 560, height: int = 360, bands: dict | None = None) -> str:
    """Line chart of named series (each a 1D sequence) with optional +-std bands."""
    if not series:
        raise ValueError("nothing to plot")
    pad_l, pad_r, pad_t, pad_b = 60, 140, 30, 40
    W = width - pad_l - pad_r
    H = height - pad_t - pad_b
    ys = [np.asarray(v, dtype=np.float64) for v in series.values()]
    lo_hi = []
    for name, y in zip(series, ys):
        b = None if bands is None else bands.get(name)
        b = np.zeros_like(y) if b is None else np.asarray(b, dtype=np.float64)
        lo_hi.append((y - b, y + b))
    finite = np.concatenate([np.concatenate(p)[np.isfinite(np.concatenate(p))] for p in lo_hi])
    ymin, ymax = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if ymax - ymin < 1e-12:
        ymin, ymax = ymin - 0.5, ymax + 0.5
    n = max(len(y) for y in ys)
    xs = max(n - 1, 1)

    def pt(i, v):
        return pad_l + W * i / xs, pad_t + H * (ymax - v) / (ymax - ymin)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect class="frame" x="{pad_l}" y="{pad_t}" width="{W}" height="{H}" fill="white" stroke="black"/>',
        f'<text x="{pad_l}" y="{pad_t - 10}" font-size="13">{escape(title)}</text>',
        f'<text x="{pad_l + W / 2}" y="{height - 8}" font-size="11" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="12" y="{pad_t + H / 2}" font-size="11" transform="rotate(-90 12 {pad_t + H / 2})" '
        f'text-anchor="middle">{escape(ylabel)}</text>',
        f'<text x="{pad_l - 6}" y="{pad_t + 4}" font-size="10" text-anchor="end">{ymax:.3g}</text>',
        f'<text x="{pad_l - 6}" y="{pad_t + H}" font-size="10" text-anchor="end">{ymin:.3g}</text>',
        f'<text x="{pad_l + W}" y="{pad_t + H + 14}" font-size="10" text-anchor="end">{n - 1}</text>',
    ]
    for j, ((name, y), (lo, hi)) in enumerate(zip(series.items(), lo_hi)):
        colour = _PALETTE[j % len(_PALETTE)]
        idx = [i for i in range(len(y)) if np.isfinite(y[i])]
        if bands is not None and bands.get(name) is not None and idx:
            upper = [pt(i, hi[i]) for i in idx]
            lower = [pt(i, lo[i]) for i in reversed(idx)]
            poly = " ".join(f"{_f(a)},{_f(b)}" for a, b in upper + lower)
            out.append(f'<polygon class="band" points="{poly}" fill="{colour}" fill-opacity="0.15" stroke="none"/>')
        pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in (pt(i, y[i]) for i in idx))
        out.append(f'<polyline class="series" points="{pts}" fill="none" stroke="{colour}" stroke-width="1.5"/>')
        ly = pad_t + 14 * (j + 1)
        out.append(f'<line x1="{pad_l + W + 10}" y1="{ly - 4}" x2="{pad_l + W + 28}" y2="{ly - 4}" '
                   f'stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{pad_l + W + 32}" y="{ly}" font-size="11">{escape(str(name))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
