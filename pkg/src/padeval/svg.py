"""Deterministic SVG rendering of DET, EER, KDE and confusion-matrix plots.

Output is a pure function of the inputs: numbers are written with six
significant digits, no timestamps or random ids are emitted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from padeval.curves import CurveSeries, EerCurve, probit
from padeval.metrics import ConfusionMatrix

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")
DET_FLOOR = 0.001
DET_CEILING = 0.5
DET_GUIDES = (10, 20)
_DET_TICKS = (0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.4, 0.5)


@dataclass(frozen=True)
class PlotOptions:
    title: str = ""
    width: int = 640
    height: int = 480
    det_range: tuple[float, float] = (DET_FLOOR, DET_CEILING)
    log_floor: float = 1e-3
    tau: float | None = None


def num(v: float) -> str:
    s = f"{float(v):.6g}"
    return "0" if s in ("-0", "0") else s


def _pct(rate: float) -> str:
    return f"{rate * 100:.2f}".replace("-0.00", "0.00")


class _Canvas:
    margin = (70, 20, 40, 55)  # left, right, top, bottom

    def __init__(self, opts: PlotOptions):
        self.opts = opts
        self.parts: list[str] = []
        left, right, top, bottom = self.margin
        self.x0, self.x1 = left, opts.width - right
        self.y0, self.y1 = opts.height - bottom, top

    def add(self, s: str):
        self.parts.append(s)

    def line(self, x1, y1, x2, y2, stroke="#000", width=1.0, dash=None):
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.add(
            f'<line x1="{num(x1)}" y1="{num(y1)}" x2="{num(x2)}" y2="{num(y2)}" '
            f'stroke="{stroke}" stroke-width="{num(width)}"{extra}/>'
        )

    def text(self, x, y, s, anchor="middle", size=11, extra=""):
        self.add(
            f'<text x="{num(x)}" y="{num(y)}" font-family="sans-serif" font-size="{size}" '
            f'text-anchor="{anchor}"{extra}>{escape(s)}</text>'
        )

    def polyline(self, xs, ys, stroke, width=1.5):
        pts = " ".join(f"{num(x)},{num(y)}" for x, y in zip(xs, ys))
        self.add(f'<polyline points="{pts}" fill="none" stroke="{stroke}" stroke-width="{num(width)}"/>')

    def frame(self, xlabel, ylabel):
        o = self.opts
        self.add(
            f'<rect x="{num(self.x0)}" y="{num(self.y1)}" width="{num(self.x1 - self.x0)}" '
            f'height="{num(self.y0 - self.y1)}" fill="none" stroke="#000"/>'
        )
        if o.title:
            self.text(o.width / 2, 22, o.title, size=14)
        self.text((self.x0 + self.x1) / 2, o.height - 12, xlabel, size=12)
        cy = (self.y0 + self.y1) / 2
        self.text(16, cy, ylabel, size=12, extra=f' transform="rotate(-90 16 {num(cy)})"')

    def legend(self, entries):
        x, y = self.x1 - 190, self.y1 + 16
        for i, (label, color) in enumerate(entries):
            yy = y + 16 * i
            self.line(x, yy - 4, x + 22, yy - 4, stroke=color, width=2)
            self.text(x + 28, yy, label, anchor="start", size=11)

    def document(self) -> str:
        o = self.opts
        head = (
            '<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{o.width}" height="{o.height}" '
            f'viewBox="0 0 {o.width} {o.height}">\n'
            f'<rect x="0" y="0" width="{o.width}" height="{o.height}" fill="#fff"/>\n'
        )
        return head + "\n".join(self.parts) + "\n</svg>\n"


def _thin(xs: np.ndarray, ys: np.ndarray, step: float = 0.25):
    """Drop points closer than ``step`` px to the last kept point; endpoints always kept."""
    if xs.size <= 2:
        return xs, ys
    keep = [0]
    lx, ly = xs[0], ys[0]
    for i in range(1, xs.size - 1):
        if abs(xs[i] - lx) >= step or abs(ys[i] - ly) >= step:
            keep.append(i)
            lx, ly = xs[i], ys[i]
    keep.append(xs.size - 1)
    return xs[keep], ys[keep]


def _scale(lo, hi, p0, p1):
    span = hi - lo
    return lambda v: p0 + (np.asarray(v, dtype=np.float64) - lo) / span * (p1 - p0)


def _det_value_at(series: CurveSeries, ap: int):
    """(APCER, BPCER) at the first threshold whose APCER is within 1/ap."""
    idx = np.flatnonzero(series.apcer <= 1.0 / ap)
    k = int(idx[0])
    return float(series.apcer[k]), float(series.bpcer[k])


def _render_det(data, c: _Canvas):
    series = list(data)
    if not series:
        raise ValueError("DET plot needs at least one series")
    lo, hi = c.opts.det_range
    if not 0 < lo < hi < 1:
        raise ValueError("DET range must satisfy 0 < low < high < 1")
    for s in series:
        if s.taus.size == 0:
            raise ValueError(f"series {s.label!r} is empty")
        if np.all((s.apcer > hi) | (s.bpcer > hi)):
            raise ValueError(f"series {s.label!r} lies entirely outside the plotted error range")
    plo, phi = probit(lo), probit(hi)
    sx = _scale(plo, phi, c.x0, c.x1)
    sy = _scale(plo, phi, c.y0, c.y1)
    c.frame("APCER (%)", "BPCER (%)")
    for t in _DET_TICKS:
        if lo <= t <= hi:
            label = num(t * 100)
            px, py = float(sx(probit(t))), float(sy(probit(t)))
            c.line(px, c.y0, px, c.y1, stroke="#ddd", width=0.5)
            c.line(c.x0, py, c.x1, py, stroke="#ddd", width=0.5)
            c.text(px, c.y0 + 16, label)
            c.text(c.x0 - 6, py + 4, label, anchor="end")
    for ap in DET_GUIDES:
        target = 1.0 / ap
        if lo <= target <= hi:
            px = float(sx(probit(target)))
            c.line(px, c.y0, px, c.y1, stroke="#000", width=1, dash="5,4")
    entries = []
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        xs = sx(probit(np.clip(s.apcer, lo, hi)))
        ys = sy(probit(np.clip(s.bpcer, lo, hi)))
        xs, ys = _thin(xs, ys)
        c.polyline(xs, ys, color)
        for ap in DET_GUIDES:
            a, b = _det_value_at(s, ap)
            if a <= hi:
                px = float(sx(probit(min(max(a, lo), hi))))
                py = float(sy(probit(min(max(b, lo), hi))))
                c.add(f'<circle cx="{num(px)}" cy="{num(py)}" r="3" fill="{color}"/>')
                c.text(px + 5, py - 5, f"BPCER{ap}={_pct(b)}%", anchor="start", size=9)
        label = s.label if s.eer is None else f"{s.label} ({_pct(s.eer)})"
        entries.append((label, color))
    c.legend(entries)


def _render_eer(data: EerCurve, c: _Canvas):
    if data.taus.size == 0:
        raise ValueError("EER plot needs a non-empty series")
    sx = _scale(0.0, 1.0, c.x0, c.x1)
    sy = _scale(0.0, 1.0, c.y0, c.y1)
    c.frame("Threshold", "Error rate")
    for t in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
        c.text(float(sx(t)), c.y0 + 16, num(t))
        c.text(c.x0 - 6, float(sy(t)) + 4, num(t), anchor="end")
        c.line(float(sx(t)), c.y0, float(sx(t)), c.y1, stroke="#ddd", width=0.5)
        c.line(c.x0, float(sy(t)), c.x1, float(sy(t)), stroke="#ddd", width=0.5)
    entries = []
    for (label, rates), color in zip((("BPCER", data.bpcer), (f"APCER {data.label}", data.apcer)), PALETTE):
        xs, ys = _thin(sx(data.taus), sy(rates))
        c.polyline(xs, ys, color)
        entries.append((label, color))
    cx, cy = float(sx(data.crossing.tau)), float(sy(data.crossing.eer))
    c.add(f'<circle cx="{num(cx)}" cy="{num(cy)}" r="4" fill="none" stroke="#000"/>')
    c.text(cx + 6, cy - 6, f"EER={_pct(data.crossing.eer)}% @ {data.crossing.tau:.4f}", anchor="start", size=10)
    c.legend(entries)


def _render_kde(data, c: _Canvas, log: bool):
    series = list(data)
    if not series or any(s.xs.size == 0 for s in series):
        raise ValueError("KDE plot needs at least one non-empty density series")
    top = max(float(np.max(s.densities)) for s in series)
    if log:
        floor = c.opts.log_floor
        if not 0 < floor < top:
            raise ValueError("log floor must be positive and below the density peak")
        ylo, yhi = math.log10(floor), math.log10(top) + 0.2
        sy_raw = _scale(ylo, yhi, c.y0, c.y1)
        sy = lambda d: sy_raw(np.log10(np.maximum(d, floor)))  # noqa: E731
        ticks = [10.0 ** e for e in range(math.ceil(ylo), math.floor(yhi) + 1)]
    else:
        yhi = top * 1.05
        sy = _scale(0.0, yhi, c.y0, c.y1)
        ticks = [yhi * i / 5 for i in range(6)]
    sx = _scale(0.0, 1.0, c.x0, c.x1)
    c.frame("Bona fide score", "Density (log)" if log else "Density")
    for t in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
        c.text(float(sx(t)), c.y0 + 16, num(t))
    for t in ticks:
        py = float(sy(t))
        c.line(c.x0, py, c.x1, py, stroke="#ddd", width=0.5)
        c.text(c.x0 - 6, py + 4, num(t) if not log else f"1e{round(math.log10(t))}", anchor="end")
    if c.opts.tau is not None:
        px = float(sx(c.opts.tau))
        c.line(px, c.y0, px, c.y1, stroke="#000", dash="5,4")
        c.text(px + 4, c.y1 + 12, f"tau={c.opts.tau:.4f}", anchor="start", size=10)
    entries = []
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        xs, ys = _thin(sx(s.xs), sy(s.densities))
        c.polyline(xs, ys, color)
        entries.append((s.class_label, color))
    c.legend(entries)


def _render_confusion(cm: ConfusionMatrix, c: _Canvas):
    if cm.counts.size == 0:
        raise ValueError("confusion matrix is empty")
    nr, nc = cm.counts.shape
    left, top = 110, 60
    cw = (c.opts.width - left - 20) / nc
    ch = (c.opts.height - top - 40) / nr
    if c.opts.title:
        c.text(c.opts.width / 2, 22, c.opts.title, size=14)
    c.text(left + cw * nc / 2, 42, "Predicted", size=12)
    row_sums = cm.counts.sum(axis=1)
    for j, lab in enumerate(cm.col_labels):
        c.text(left + cw * (j + 0.5), top - 4, lab, size=11)
    for i, lab in enumerate(cm.row_labels):
        y = top + ch * i
        c.text(left - 6, y + ch / 2 + 4, lab, anchor="end", size=11)
        for j in range(nc):
            n = int(cm.counts[i, j])
            frac = n / row_sums[i] if row_sums[i] else 0.0
            shade = round(255 - 200 * frac)
            fill = f"#{shade:02x}{shade:02x}ff"
            x = left + cw * j
            c.add(
                f'<rect x="{num(x)}" y="{num(y)}" width="{num(cw)}" height="{num(ch)}" '
                f'fill="{fill}" stroke="#fff"/>'
            )
            c.text(x + cw / 2, y + ch / 2 + 4, str(n), size=12)
    c.text(30, top + ch * nr / 2, "True", size=12,
           extra=f' transform="rotate(-90 30 {num(top + ch * nr / 2)})"')


PLOTS = ("det", "eer", "kde-linear", "kde-log", "confusion")


def render_svg(plot: str, data, options: PlotOptions | None = None) -> str:
    """Render ``data`` as an SVG 1.1 document.

    ``plot`` selects the data type expected: ``det`` a list of
    :class:`CurveSeries`, ``eer`` an :class:`EerCurve`, ``kde-linear`` /
    ``kde-log`` a list of :class:`DensitySeries`, ``confusion`` a
    :class:`ConfusionMatrix`.
    """
    opts = options or PlotOptions()
    if opts.width < 200 or opts.height < 150:
        raise ValueError("plot must be at least 200x150 pixels")
    canvas = _Canvas(opts)
    if plot == "det":
        _render_det(data, canvas)
    elif plot == "eer":
        _render_eer(data, canvas)
    elif plot in ("kde-linear", "kde-log"):
        _render_kde(data, canvas, log=plot == "kde-log")
    elif plot == "confusion":
        _render_confusion(data, canvas)
    else:
        raise ValueError(f"unknown plot type {plot!r}; expected one of {PLOTS}")
    return canvas.document()


__all__ = ["PlotOptions", "render_svg", "PLOTS", "num"]
