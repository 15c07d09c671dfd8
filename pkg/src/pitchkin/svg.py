"""Minimal SVG rendering of acceleration-speed profiles."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

from .asprofile import ASProfile

WIDTH, HEIGHT = 640, 420
MARGIN = {"left": 60, "right": 20, "top": 40, "bottom": 50}


def _nice_step(span: float, target: int = 6) -> float:
    raw = span / target
    mag = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 2.5, 5, 10):
        if m * mag >= raw:
            return m * mag
    return 10 * mag


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def profile_svg(profile: ASProfile, title: str = "", comment: str = "") -> str:
    """Scatter of selected points (kept filled, rejected hollow) with the fitted line."""
    speeds = [p.speed for p in profile.points]
    accels = [p.accel for p in profile.points]
    x_max = max([profile.S0_mps] + speeds) * 1.05
    y_max = max([profile.A0_mps2] + accels) * 1.1
    y_min = min([0.0] + accels)
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(v):
        return MARGIN["left"] + pw * v / x_max

    def sy(v):
        return MARGIN["top"] + ph * (y_max - v) / (y_max - y_min)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">']
    if comment:
        out.append(f"<!-- {escape(comment)} -->")
    out.append(f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    # axes and ticks
    x0, y0 = sx(0), sy(0)
    out.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(sy(y_min))}" x2="{_fmt(x0)}" y2="{_fmt(sy(y_max))}" stroke="black"/>')
    out.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(sx(x_max))}" y2="{_fmt(y0)}" stroke="black"/>')
    step = _nice_step(x_max)
    k = 0
    while k * step <= x_max + 1e-9:
        v = k * step
        out.append(f'<line x1="{_fmt(sx(v))}" y1="{_fmt(y0)}" x2="{_fmt(sx(v))}" y2="{_fmt(y0 + 4)}" stroke="black"/>')
        out.append(f'<text x="{_fmt(sx(v))}" y="{_fmt(y0 + 16)}" text-anchor="middle">{v:g}</text>')
        k += 1
    step = _nice_step(y_max - y_min)
    k = math.ceil(y_min / step)
    while k * step <= y_max + 1e-9:
        v = k * step
        out.append(f'<line x1="{_fmt(x0 - 4)}" y1="{_fmt(sy(v))}" x2="{_fmt(x0)}" y2="{_fmt(sy(v))}" stroke="black"/>')
        out.append(f'<text x="{_fmt(x0 - 7)}" y="{_fmt(sy(v) + 4)}" text-anchor="end">{v:g}</text>')
        k += 1
    out.append(f'<text x="{_fmt(MARGIN["left"] + pw / 2)}" y="{HEIGHT - 12}" text-anchor="middle">'
               'speed (m/s)</text>')
    out.append(f'<text x="16" y="{_fmt(MARGIN["top"] + ph / 2)}" text-anchor="middle" '
               f'transform="rotate(-90 16 {_fmt(MARGIN["top"] + ph / 2)})">acceleration (m/s²)</text>')
    if title:
        out.append(f'<text x="{WIDTH / 2:.2f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')

    for p in profile.points:
        style = 'fill="#1f77b4"' if p.kept else 'fill="none" stroke="#d62728" stroke-width="1.5"'
        out.append(f'<circle cx="{_fmt(sx(p.speed))}" cy="{_fmt(sy(p.accel))}" r="3" {style}/>')
    out.append(f'<line x1="{_fmt(sx(0))}" y1="{_fmt(sy(profile.A0_mps2))}" x2="{_fmt(sx(profile.S0_mps))}" '
               f'y2="{_fmt(sy(0))}" stroke="#2ca02c" stroke-width="2"/>')
    tx = WIDTH - MARGIN["right"] - 8
    lines = [f"A0 = {profile.A0_mps2:.2f} m/s²", f"S0 = {profile.S0_mps:.2f} m/s",
             f"slope = {profile.slope:.3f} 1/s", f"r² = {profile.r2:.3f}",
             f"kept {len(profile.kept)} / rejected {len(profile.rejected)}"]
    for i, text in enumerate(lines):
        out.append(f'<text x="{tx}" y="{MARGIN["top"] + 16 + 16 * i}" text-anchor="end">{escape(text)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
