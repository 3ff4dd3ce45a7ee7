"""Tiny SVG line-plot renderer (no plotting dependency)."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

__all__ = ["Panel", "render_panels", "platoon_svg", "error_svg"]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
_W, _H, _PAD_L, _PAD_R, _PAD_T, _PAD_B = 640, 220, 70, 110, 28, 36


class Panel:
    """One axes box: a title, shared x samples and labelled y series."""

    def __init__(self, title: str, x, series: dict, ylabel: str = ""):
        self.title = title
        self.x = np.asarray(x, dtype=float)
        self.series = {k: np.asarray(v, dtype=float) for k, v in series.items()}
        self.ylabel = ylabel


def _thin(x, y, max_points=1500):
    step = max(1, len(x) // max_points)
    return x[::step], y[::step]


def _panel_svg(p: Panel, y0: int) -> list[str]:
    out = []
    x_lo, x_hi = float(p.x.min()), float(p.x.max())
    ys = np.concatenate([v[np.isfinite(v)] for v in p.series.values()]) if p.series else np.zeros(1)
    y_lo, y_hi = (float(ys.min()), float(ys.max())) if ys.size else (0.0, 1.0)
    if y_hi - y_lo < 1e-12:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    if x_hi - x_lo < 1e-12:
        x_hi = x_lo + 1.0
    pw = _W - _PAD_L - _PAD_R
    ph = _H - _PAD_T - _PAD_B

    def sx(v):
        return _PAD_L + (v - x_lo) / (x_hi - x_lo) * pw

    def sy(v):
        return y0 + _PAD_T + (y_hi - v) / (y_hi - y_lo) * ph

    out.append(f'<rect x="{_PAD_L}" y="{y0 + _PAD_T}" width="{pw}" height="{ph}" '
               'fill="none" stroke="#444"/>')
    out.append(f'<text x="{_PAD_L}" y="{y0 + 18}" font-size="13">{escape(p.title)}</text>')
    for frac in (0.0, 0.5, 1.0):
        yv = y_lo + frac * (y_hi - y_lo)
        out.append(f'<text x="{_PAD_L - 6}" y="{sy(yv) + 4:.1f}" font-size="10" '
                   f'text-anchor="end">{yv:.3g}</text>')
        xv = x_lo + frac * (x_hi - x_lo)
        out.append(f'<text x="{sx(xv):.1f}" y="{y0 + _H - 20}" font-size="10" '
                   f'text-anchor="middle">{xv:.3g}</text>')
    if p.ylabel:
        out.append(f'<text x="14" y="{y0 + _PAD_T + ph / 2:.1f}" font-size="11" '
                   f'transform="rotate(-90 14 {y0 + _PAD_T + ph / 2:.1f})" '
                   f'text-anchor="middle">{escape(p.ylabel)}</text>')
    for k, (label, y) in enumerate(p.series.items()):
        color = _COLORS[k % len(_COLORS)]
        xt, yt = _thin(p.x, y)
        pts = " ".join(f"{sx(a):.1f},{sy(b):.1f}" for a, b in zip(xt, yt) if np.isfinite(b))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        ly = y0 + _PAD_T + 12 + 14 * k
        out.append(f'<line x1="{_W - _PAD_R + 8}" y1="{ly - 4}" x2="{_W - _PAD_R + 24}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_W - _PAD_R + 28}" y="{ly}" font-size="10">{escape(label)}</text>')
    return out


def render_panels(panels, xlabel: str = "time [s]") -> str:
    """Stack panels vertically into one SVG document."""
    height = _H * len(panels) + 20
    body = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{height}" '
            f'viewBox="0 0 {_W} {height}" font-family="sans-serif">',
            f'<rect width="{_W}" height="{height}" fill="white"/>']
    for k, p in enumerate(panels):
        body += _panel_svg(p, k * _H)
    body.append(f'<text x="{_PAD_L + (_W - _PAD_L - _PAD_R) / 2}" y="{height - 6}" '
                f'font-size="11" text-anchor="middle">{escape(xlabel)}</text>')
    body.append("</svg>")
    return "\n".join(body) + "\n"


def error_svg(traj) -> str:
    """Single panel of per-node estimation error norms."""
    errn = traj.error_norms()
    series = {f"node {i + 1}": errn[:, i] for i in range(errn.shape[1])}
    return render_panels([Panel("estimation error norms", traj.times, series, "|e_i|")])


def platoon_svg(traj, d_gap: float = 20.0) -> str:
    """Error norms, vehicle velocities and inter-vehicle spacings."""
    t = traj.times
    errn = traj.error_norms()
    s, v = traj.x[:, 0::3], traj.x[:, 1::3]
    panels = [
        Panel("estimation error norms", t,
              {f"node {i + 1}": errn[:, i] for i in range(errn.shape[1])}, "|e_i|"),
        Panel("velocities", t, {f"vehicle {k + 1}": v[:, k] for k in range(v.shape[1])}, "m/s"),
        Panel(f"spacing s_i - s_(i-1) (target -{d_gap:g} m)", t,
              {f"{k + 1}-{k}": s[:, k] - s[:, k - 1] for k in range(1, s.shape[1])}, "m"),
    ]
    return render_panels(panels)
