"""Dependency-free SVG figures: line series with error bars, heatmaps and
scatter clouds.  Output is a pure function of the input (fixed number
formatting, no timestamps), so identical data give identical bytes."""

from __future__ import annotations

import base64
import math
import struct
import zlib
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .errors import ValidationError

WIDTH, HEIGHT = 480, 360
MARGIN = dict(left=60, right=20, top=30, bottom=45)
PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f")


def _f(x: float) -> str:
    return f"{x:.2f}"


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


class _Frame:
    def __init__(self, xlo, xhi, ylo, yhi, width=WIDTH, height=HEIGHT):
        if xhi <= xlo:
            xlo, xhi = xlo - 0.5, xhi + 0.5
        if yhi <= ylo:
            ylo, yhi = ylo - 0.5, yhi + 0.5
        self.xlo, self.xhi, self.ylo, self.yhi = xlo, xhi, ylo, yhi
        self.w, self.h = width, height
        self.x0, self.x1 = MARGIN["left"], width - MARGIN["right"]
        self.y0, self.y1 = height - MARGIN["bottom"], MARGIN["top"]

    def px(self, x):
        return self.x0 + (x - self.xlo) / (self.xhi - self.xlo) * (self.x1 - self.x0)

    def py(self, y):
        return self.y0 + (y - self.ylo) / (self.yhi - self.ylo) * (self.y1 - self.y0)

    def axes(self, title: str, xlabel: str, ylabel: str) -> list[str]:
        out = [
            f'<rect x="{self.x0}" y="{self.y1}" width="{self.x1 - self.x0}" height="{self.y0 - self.y1}" fill="none" stroke="#000"/>'
        ]
        for t in _nice_ticks(self.xlo, self.xhi):
            x = _f(self.px(t))
            out.append(f'<line x1="{x}" y1="{self.y0}" x2="{x}" y2="{self.y0 + 4}" stroke="#000"/>')
            out.append(f'<text x="{x}" y="{self.y0 + 16}" font-size="11" text-anchor="middle">{t:g}</text>')
        for t in _nice_ticks(self.ylo, self.yhi):
            y = _f(self.py(t))
            out.append(f'<line x1="{self.x0 - 4}" y1="{y}" x2="{self.x0}" y2="{y}" stroke="#000"/>')
            out.append(f'<text x="{self.x0 - 6}" y="{y}" font-size="11" text-anchor="end" dominant-baseline="middle">{t:g}</text>')
        cx = _f(0.5 * (self.x0 + self.x1))
        cy = _f(0.5 * (self.y0 + self.y1))
        out.append(f'<text x="{cx}" y="{self.h - 8}" font-size="13" text-anchor="middle">{escape(xlabel)}</text>')
        out.append(
            f'<text x="14" y="{cy}" font-size="13" text-anchor="middle" transform="rotate(-90 14 {cy})">{escape(ylabel)}</text>'
        )
        out.append(f'<text x="{cx}" y="18" font-size="14" text-anchor="middle">{escape(title)}</text>')
        return out

    def legend(self, entries: Sequence[tuple[str, str]], marker: str = "line") -> list[str]:
        out = []
        for i, (label, color) in enumerate(entries):
            y = self.y1 + 14 + 16 * i
            x = self.x1 - 120
            if marker == "line":
                out.append(f'<line x1="{x}" y1="{y}" x2="{x + 18}" y2="{y}" stroke="{color}" stroke-width="2"/>')
            else:
                out.append(f'<circle cx="{x + 9}" cy="{y}" r="4" fill="{color}"/>')
            out.append(f'<text x="{x + 24}" y="{y}" font-size="11" dominant-baseline="middle">{escape(label)}</text>')
        return out


def _doc(width: int, height: int, body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">'
    )
    return "\n".join([head, f'<rect width="{width}" height="{height}" fill="#fff"/>', *body, "</svg>"]) + "\n"


def _finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ValidationError("plot data must be finite")


def svg_series(
    series: Sequence[dict],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    ylim: Optional[tuple] = None,
    hlines: Sequence[float] = (),
    vspan: Optional[tuple] = None,
) -> str:
    """Line plot; each series is ``{"label", "x", "y"[, "yerr"]}`` and
    becomes one ``<polyline>``."""
    if not series or any(len(s["x"]) == 0 for s in series):
        raise ValidationError("empty series")
    xs = [np.asarray(s["x"], float) for s in series]
    ys = [np.asarray(s["y"], float) for s in series]
    errs = [np.asarray(s.get("yerr", np.zeros(len(y))), float) for s, y in zip(series, ys)]
    _finite(*xs, *ys, *errs)
    xlo, xhi = min(x.min() for x in xs), max(x.max() for x in xs)
    if ylim is None:
        ylo = min((y - e).min() for y, e in zip(ys, errs))
        yhi = max((y + e).max() for y, e in zip(ys, errs))
        pad = 0.05 * (yhi - ylo or 1.0)
        ylim = (ylo - pad, yhi + pad)
    fr = _Frame(xlo, xhi, *ylim)
    body = []
    if vspan is not None:
        a, b = fr.px(vspan[0]), fr.px(vspan[1])
        body.append(f'<rect x="{_f(min(a, b))}" y="{fr.y1}" width="{_f(max(abs(b - a), 1.0))}" height="{fr.y0 - fr.y1}" fill="#ddd"/>')
    body += fr.axes(title, xlabel, ylabel)
    for h in hlines:
        y = _f(fr.py(h))
        body.append(f'<line x1="{fr.x0}" y1="{y}" x2="{fr.x1}" y2="{y}" stroke="#999" stroke-dasharray="4 3"/>')
    entries = []
    for i, (s, x, y, e) in enumerate(zip(series, xs, ys, errs)):
        color = s.get("color", PALETTE[i % len(PALETTE)])
        pts = " ".join(f"{_f(fr.px(a))},{_f(fr.py(b))}" for a, b in zip(x, y))
        body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for a, b, d in zip(x, y, e):
            if d > 0:
                body.append(
                    f'<line x1="{_f(fr.px(a))}" y1="{_f(fr.py(b - d))}" x2="{_f(fr.px(a))}" y2="{_f(fr.py(b + d))}" stroke="{color}"/>'
                )
        entries.append((s.get("label", f"series {i + 1}"), color))
    body += fr.legend(entries)
    return _doc(WIDTH, HEIGHT, body)


def _gray(v: float) -> str:
    g = int(round(255 * (1.0 - min(max(v, 0.0), 1.0))))
    return f"#{g:02x}{g:02x}{g:02x}"


def png_gray(img: np.ndarray) -> bytes:
    """8-bit grayscale PNG (values in [0, 1], 1 = black)."""
    a = np.asarray(img, float)
    lo, hi = 0.0, 1.0
    g = np.clip(np.round(255 * (1.0 - (a - lo) / (hi - lo))), 0, 255).astype(np.uint8)
    raw = b"".join(b"\x00" + row.tobytes() for row in g)

    def chunk(tag, data):
        return struct.pack(">I", len(data)) + tag + data + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF)

    ihdr = struct.pack(">IIBBBBB", g.shape[1], g.shape[0], 8, 0, 0, 0, 0)
    return b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", ihdr) + chunk(b"IDAT", zlib.compress(raw, 9)) + chunk(b"IEND", b"")


def svg_heatmap(img, title: str = "", mode: str = "rects", scale: Optional[float] = None) -> str:
    """Gray-scale image, row 0 at the top; one ``<rect>`` per pixel or a
    single embedded PNG."""
    a = np.asarray(img, float)
    if a.ndim != 2 or a.size == 0:
        raise ValidationError("heatmap needs a non-empty 2-D array")
    _finite(a)
    top = a.max() if scale is None else scale
    a = a / top if top > 0 else a
    ny, nx = a.shape
    cell = max(1.0, min(400.0 / nx, 400.0 / ny))
    w, h = int(math.ceil(nx * cell)) + 20, int(math.ceil(ny * cell)) + 40
    body = [f'<text x="{w / 2:.1f}" y="18" font-size="14" text-anchor="middle">{escape(title)}</text>']
    if mode == "rects":
        for i in range(ny):
            for j in range(nx):
                body.append(
                    f'<rect x="{_f(10 + j * cell)}" y="{_f(30 + i * cell)}" width="{_f(cell)}" height="{_f(cell)}" fill="{_gray(a[i, j])}"/>'
                )
    elif mode == "raster":
        data = base64.b64encode(png_gray(a)).decode()
        body.append(
            f'<image x="10" y="30" width="{_f(nx * cell)}" height="{_f(ny * cell)}" '
            f'style="image-rendering:pixelated" href="data:image/png;base64,{data}"/>'
        )
    else:
        raise ValidationError(f"unknown heatmap mode {mode!r}")
    return _doc(w, h, body)


def svg_scatter(z, classes, names: Sequence[str], title: str = "", xlabel: str = "z1", ylabel: str = "z2") -> str:
    z = np.asarray(z, float)
    c = np.asarray(classes)
    if z.size == 0:
        raise ValidationError("empty scatter")
    _finite(z)
    fr = _Frame(z[:, 0].min(), z[:, 0].max(), z[:, 1].min(), z[:, 1].max())
    body = fr.axes(title, xlabel, ylabel)
    entries = []
    for k, name in enumerate(names):
        color = PALETTE[k % len(PALETTE)]
        pts = z[c == k]
        for a, b in pts:
            body.append(f'<circle cx="{_f(fr.px(a))}" cy="{_f(fr.py(b))}" r="2" fill="{color}" fill-opacity="0.6"/>')
        if len(pts):
            entries.append((name, color))
    body += fr.legend(entries, marker="dot")
    return _doc(WIDTH, HEIGHT, body)
