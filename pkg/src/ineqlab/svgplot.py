"""Minimal self-contained SVG plotting (no external renderer).

Plots are conveniences layered over the CSV outputs: one polyline per
series, linear or logarithmic axes, tick labels in scientific notation.
"""

from __future__ import annotations

import math

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
_W, _H = 640, 420
_ML, _MR, _MT, _MB = 70, 20, 30, 50


def _ticks(lo, hi, log):
    if log:
        lo_e = math.floor(math.log10(lo))
        hi_e = math.ceil(math.log10(hi))
        return [10.0**e for e in range(lo_e, hi_e + 1)]
    span = hi - lo or 1.0
    step = 10 ** math.floor(math.log10(span))
    if span / step > 5:
        step *= 2
    elif span / step < 2:
        step /= 2
    t0 = math.ceil(lo / step) * step
    out = []
    t = t0
    while t <= hi + 1e-12 * span:
        out.append(t)
        t += step
    return out or [lo, hi]


def _fmt(v):
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.1e}"
    return f"{v:g}"


def line_plot(path, series, title="", xlabel="", ylabel="", logx=False, logy=False):
    """Write a standalone SVG.  series = [(label, xs, ys), ...]."""
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys if y > 0 or not logy]
    if not xs_all or not ys_all:
        xs_all, ys_all = [1.0], [1.0]
    xlo, xhi = min(xs_all), max(xs_all)
    ylo, yhi = min(ys_all), max(ys_all)
    if logx:
        xlo, xhi = max(xlo, 1e-300), max(xhi, 1e-299)
    if logy:
        ylo, yhi = max(ylo, 1e-300), max(yhi, 1e-299)
    if xlo == xhi:
        xlo, xhi = xlo * 0.9 or -1, xhi * 1.1 or 1
    if ylo == yhi:
        ylo, yhi = ylo * 0.9 or -1, yhi * 1.1 or 1

    def tx(x):
        if logx:
            f = (math.log10(x) - math.log10(xlo)) / (math.log10(xhi) - math.log10(xlo))
        else:
            f = (x - xlo) / (xhi - xlo)
        return _ML + f * (_W - _ML - _MR)

    def ty(y):
        if logy:
            f = (math.log10(y) - math.log10(ylo)) / (math.log10(yhi) - math.log10(ylo))
        else:
            f = (y - ylo) / (yhi - ylo)
        return _H - _MB - f * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'font-family="sans-serif" font-size="11">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W/2}" y="18" text-anchor="middle" font-size="13">{title}</text>',
        f'<line x1="{_ML}" y1="{_H-_MB}" x2="{_W-_MR}" y2="{_H-_MB}" stroke="black"/>',
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H-_MB}" stroke="black"/>',
        f'<text x="{_W/2}" y="{_H-12}" text-anchor="middle">{xlabel}</text>',
        f'<text x="16" y="{_H/2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {_H/2})">{ylabel}</text>',
    ]
    for t in _ticks(xlo, xhi, logx):
        if xlo <= t <= xhi * (1 + 1e-12):
            x = tx(t)
            parts.append(f'<line x1="{x}" y1="{_H-_MB}" x2="{x}" y2="{_H-_MB+4}" stroke="black"/>')
            parts.append(f'<text x="{x}" y="{_H-_MB+16}" text-anchor="middle">{_fmt(t)}</text>')
    for t in _ticks(ylo, yhi, logy):
        if ylo <= t <= yhi * (1 + 1e-12):
            y = ty(t)
            parts.append(f'<line x1="{_ML-4}" y1="{y}" x2="{_ML}" y2="{y}" stroke="black"/>')
            parts.append(f'<text x="{_ML-7}" y="{y+4}" text-anchor="end">{_fmt(t)}</text>')
    for i, (label, xs, ys) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{tx(x):.2f},{ty(y):.2f}" for x, y in zip(xs, ys) if not logy or y > 0)
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in zip(xs, ys):
            if not logy or y > 0:
                parts.append(f'<circle cx="{tx(x):.2f}" cy="{ty(y):.2f}" r="2.5" fill="{color}"/>')
        parts.append(
            f'<text x="{_W-_MR-8}" y="{_MT+14+14*i}" text-anchor="end" fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
