"""Dependency-free SVG figures: CED curves, embedding scatter plots and landmark-error faces."""
from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .metrics import ced_curve

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
           "#bcbd22", "#17becf")
MIN_RADIUS = 1.5
MAX_RADIUS = 9.0

KINDS = ("ced", "scatter", "landmark_error")


class PlotError(ValueError):
    pass


@dataclass
class PlotSpec:
    """What to draw.

    * ``ced``: ``series`` maps a label to a list of per-image NMEs.
      ``x_range`` defaults to ``(0, 15)``; ``threshold`` adds a dashed marker.
    * ``scatter``: ``series`` maps a group label to an ``(N, 2)`` array.
    * ``landmark_error``: ``series["face"]`` is a ``(68, 2)`` face in image
      coordinates and every other entry a length-68 error vector, drawn as
      one panel each.  A face alone is drawn with minimum-size markers.
    """

    kind: str
    series: Dict[str, object]
    title: str = ""
    x_range: Optional[Tuple[float, float]] = None
    y_range: Optional[Tuple[float, float]] = None
    threshold: Optional[float] = None
    x_label: str = ""
    y_label: str = ""
    width: int = 640
    height: int = 480
    options: dict = field(default_factory=dict)


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


class _Canvas:
    def __init__(self, width, height, title):
        self.root = ET.Element("svg", {
            "xmlns": "http://www.w3.org/2000/svg", "version": "1.1",
            "width": str(width), "height": str(height), "viewBox": f"0 0 {width} {height}",
        })
        ET.SubElement(self.root, "rect", {"x": "0", "y": "0", "width": str(width), "height": str(height),
                                          "fill": "white"})
        if title:
            self.text(width / 2, 22, title, size=16, anchor="middle")

    def text(self, x, y, s, size=12, anchor="start", parent=None, **attrs):
        el = ET.SubElement(parent if parent is not None else self.root, "text", {
            "x": _fmt(x), "y": _fmt(y), "font-family": "sans-serif", "font-size": str(size),
            "text-anchor": anchor, **attrs})
        el.text = s
        return el

    def line(self, x1, y1, x2, y2, stroke="black", parent=None, **attrs):
        return ET.SubElement(parent if parent is not None else self.root, "line", {
            "x1": _fmt(x1), "y1": _fmt(y1), "x2": _fmt(x2), "y2": _fmt(y2), "stroke": stroke, **attrs})

    def tostring(self) -> str:
        ET.indent(self.root)
        return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(self.root, encoding="unicode") + "\n"


class _Axes:
    """Linear map from data to a pixel frame with y pointing up."""

    def __init__(self, canvas, left, top, right, bottom, x_range, y_range):
        self.c = canvas
        self.left, self.top, self.right, self.bottom = left, top, right, bottom
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0

    def px(self, x):
        return self.left + (x - self.x0) / (self.x1 - self.x0) * (self.right - self.left)

    def py(self, y):
        return self.bottom - (y - self.y0) / (self.y1 - self.y0) * (self.bottom - self.top)

    def draw_frame(self, x_label="", y_label="", ticks=5):
        g = ET.SubElement(self.c.root, "g", {"class": "axes"})
        ET.SubElement(g, "rect", {"x": _fmt(self.left), "y": _fmt(self.top),
                                  "width": _fmt(self.right - self.left), "height": _fmt(self.bottom - self.top),
                                  "fill": "none", "stroke": "black"})
        for k in range(ticks + 1):
            xv = self.x0 + (self.x1 - self.x0) * k / ticks
            yv = self.y0 + (self.y1 - self.y0) * k / ticks
            self.c.line(self.px(xv), self.bottom, self.px(xv), self.bottom + 5, parent=g)
            self.c.text(self.px(xv), self.bottom + 18, f"{xv:g}", size=10, anchor="middle", parent=g)
            self.c.line(self.left - 5, self.py(yv), self.left, self.py(yv), parent=g)
            self.c.text(self.left - 8, self.py(yv) + 4, f"{yv:g}", size=10, anchor="end", parent=g)
        if x_label:
            self.c.text((self.left + self.right) / 2, self.bottom + 36, x_label, anchor="middle", parent=g)
        if y_label:
            ymid = (self.top + self.bottom) / 2
            self.c.text(self.left - 42, ymid, y_label, anchor="middle", parent=g,
                        transform=f"rotate(-90 {_fmt(self.left - 42)} {_fmt(ymid)})")


def _legend(canvas, x, y, entries):
    g = ET.SubElement(canvas.root, "g", {"class": "legend"})
    for k, (label, color) in enumerate(entries):
        entry = ET.SubElement(g, "g", {"class": "legend-entry"})
        ET.SubElement(entry, "rect", {"x": _fmt(x), "y": _fmt(y + 18 * k), "width": "12", "height": "12",
                                      "fill": color})
        canvas.text(x + 18, y + 18 * k + 11, label, size=11, parent=entry)


def _check_series(spec):
    if spec.kind not in KINDS:
        raise PlotError(f"unknown plot kind {spec.kind!r}; expected one of {KINDS}")
    if not spec.series:
        raise PlotError("plot needs at least one series")


def _render_ced(spec: PlotSpec) -> str:
    canvas = _Canvas(spec.width, spec.height, spec.title)
    x_range = spec.x_range or (0.0, 15.0)
    ax = _Axes(canvas, 70, 40, spec.width - 170, spec.height - 60, x_range, spec.y_range or (0.0, 1.0))
    ax.draw_frame(spec.x_label or "NME", spec.y_label or "fraction of images")
    entries = []
    for k, (label, values) in enumerate(spec.series.items()):
        if len(values) == 0:
            raise PlotError(f"series {label!r} is empty")
        color = PALETTE[k % len(PALETTE)]
        xs, ys = ced_curve(values).steps(x_range[1])
        pts = " ".join(f"{_fmt(ax.px(x))},{_fmt(ax.py(y))}" for x, y in zip(xs, ys))
        ET.SubElement(canvas.root, "polyline", {"points": pts, "fill": "none", "stroke": color,
                                                "stroke-width": "2", "class": "ced"}).set("data-label", label)
        entries.append((label, color))
    if spec.threshold is not None:
        canvas.line(ax.px(spec.threshold), ax.top, ax.px(spec.threshold), ax.bottom, stroke="#555555",
                    **{"stroke-dasharray": "4 4", "class": "threshold"})
    _legend(canvas, spec.width - 160, 50, entries)
    return canvas.tostring()


def _render_scatter(spec: PlotSpec) -> str:
    groups = {}
    for label, pts in spec.series.items():
        arr = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
        if arr.size == 0:
            raise PlotError(f"series {label!r} is empty")
        if not np.all(np.isfinite(arr)):
            raise PlotError(f"series {label!r} has non-finite values")
        groups[label] = arr
    allpts = np.vstack(list(groups.values()))
    pad = 0.05 * max(np.ptp(allpts[:, 0]), np.ptp(allpts[:, 1]), 1e-9)
    x_range = spec.x_range or (allpts[:, 0].min() - pad, allpts[:, 0].max() + pad)
    y_range = spec.y_range or (allpts[:, 1].min() - pad, allpts[:, 1].max() + pad)
    canvas = _Canvas(spec.width, spec.height, spec.title)
    ax = _Axes(canvas, 70, 40, spec.width - 170, spec.height - 60, x_range, y_range)
    ax.draw_frame(spec.x_label, spec.y_label)
    entries = []
    for k, (label, arr) in enumerate(groups.items()):
        color = PALETTE[k % len(PALETTE)]
        g = ET.SubElement(canvas.root, "g", {"class": "group", "data-label": label, "fill": color,
                                             "fill-opacity": "0.75"})
        for x, y in arr:
            ET.SubElement(g, "circle", {"cx": _fmt(ax.px(x)), "cy": _fmt(ax.py(y)), "r": "3"})
        entries.append((label, color))
    _legend(canvas, spec.width - 160, 50, entries)
    return canvas.tostring()


def _error_color(frac: float) -> str:
    # blue (low) to red (high)
    r = int(round(40 + 215 * frac))
    b = int(round(220 - 200 * frac))
    return f"#{r:02x}40{b:02x}"


def _render_landmark_error(spec: PlotSpec) -> str:
    if "face" not in spec.series:
        raise PlotError("landmark_error plot needs a 'face' series")
    face = np.asarray(spec.series["face"], dtype=np.float64)
    if face.shape != (68, 2) or not np.all(np.isfinite(face)):
        raise PlotError("'face' must be a finite (68, 2) array")
    panels = {k: np.asarray(v, dtype=np.float64) for k, v in spec.series.items() if k != "face"}
    if not panels:
        panels = {"": np.zeros(68)}
    for label, err in panels.items():
        if err.shape != (68,) or not np.all(np.isfinite(err)) or np.any(err < 0):
            raise PlotError(f"error series {label!r} must be 68 finite non-negative values")
    vmax = max(float(e.max()) for e in panels.values())
    vmax = spec.options.get("max_error", vmax)

    n = len(panels)
    panel_w = (spec.width - 20) / n
    canvas = _Canvas(spec.width, spec.height, spec.title)
    lo, hi = face.min(axis=0), face.max(axis=0)
    span = max(float((hi - lo).max()), 1e-9)
    for k, (label, err) in enumerate(panels.items()):
        left = 10 + k * panel_w
        top, size = 50, min(panel_w - 40, spec.height - 90)
        scale = size / span
        g = ET.SubElement(canvas.root, "g", {"class": "panel", "data-label": label})
        if label:
            canvas.text(left + panel_w / 2, 42, label, size=13, anchor="middle", parent=g)
        for (x, y), e in zip(face, err):
            frac = e / vmax if vmax > 0 else 0.0
            r = MIN_RADIUS + (MAX_RADIUS - MIN_RADIUS) * frac
            cx = left + 20 + (x - lo[0]) * scale
            cy = top + (y - lo[1]) * scale
            circle = ET.SubElement(g, "circle", {"cx": _fmt(cx), "cy": _fmt(cy), "r": _fmt(r),
                                                 "fill": _error_color(frac), "class": "landmark"})
            ET.SubElement(circle, "title").text = f"{e:.3f}"
    if vmax > 0:
        canvas.text(10, spec.height - 12, f"marker size and color scale to max error {vmax:.2f}", size=11)
    return canvas.tostring()


def render_plot(spec: PlotSpec) -> str:
    """Render ``spec`` to a standalone SVG document."""
    _check_series(spec)
    return {"ced": _render_ced, "scatter": _render_scatter,
            "landmark_error": _render_landmark_error}[spec.kind](spec)
