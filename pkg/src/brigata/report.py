"""CSV tables and dependency-free SVG figures."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from typing import Sequence
from xml.sax.saxutils import escape, quoteattr

import numpy as np

log = logging.getLogger(__name__)

LOW_COLOR = "#f7f7f7"
HIGH_COLOR = "#0b3d91"
FONT = 'font-family="Helvetica, Arial, sans-serif"'


def emit_csv(rows: Sequence[Sequence], header: Sequence[str]) -> str:
    """Minimal quoting, rows ending in a bare newline."""
    width = len(header)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"row {i} has {len(row)} fields, header has {width}")
    out = []
    for row in [header, *rows]:
        # a CRLF terminator makes the writer quote any field holding \r or \n
        buf = io.StringIO()
        try:
            csv.writer(buf, lineterminator="\r\n").writerow(row)
        except csv.Error as exc:
            raise ValueError(f"cannot write row {row!r} as CSV: {exc}") from None
        out.append(buf.getvalue()[:-2] + "\n")
    return "".join(out)


def _rgb(color: str) -> tuple[int, int, int]:
    c = color.lstrip("#")
    if len(c) != 6:
        raise ValueError(f"expected #rrggbb, got {color!r}")
    return tuple(int(c[i:i + 2], 16) for i in (0, 2, 4))


def interpolate_color(low: str, high: str, v: float) -> str:
    lo, hi = _rgb(low), _rgb(high)
    return "#" + "".join(f"{round(a + (b - a) * v):02x}" for a, b in zip(lo, hi))


def _num(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


@dataclass(frozen=True)
class HeatmapSpec:
    values: np.ndarray
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    low_color: str = LOW_COLOR
    high_color: str = HIGH_COLOR
    cell_px: int = 24
    title: str = ""

    @classmethod
    def from_profile(cls, profile, title: str = "", **kw) -> "HeatmapSpec":
        cols = tuple(label or f"topic_{t}" for t, label in zip(profile.topics, profile.topic_labels))
        return cls(np.asarray(profile.values, dtype=float), tuple(profile.rows), cols, title=title, **kw)


def emit_heatmap_svg(spec: HeatmapSpec) -> str:
    """One rect per cell, colored linearly from the low to the high color by
    value; values outside [0, 1] are clamped with a warning."""
    v = np.asarray(spec.values, dtype=float)
    if v.ndim != 2:
        raise ValueError("heatmap values must be 2-D")
    n_rows, n_cols = v.shape
    if len(spec.row_labels) != n_rows or len(spec.col_labels) != n_cols:
        raise ValueError(f"labels ({len(spec.row_labels)} rows, {len(spec.col_labels)} cols) "
                         f"do not match a {n_rows}x{n_cols} matrix")
    if not np.all(np.isfinite(v)):
        raise ValueError("heatmap values must be finite")
    if v.size and (v.min() < 0 or v.max() > 1):
        log.warning("heatmap values outside [0, 1] clamped (range %.4g..%.4g)", v.min(), v.max())
        v = np.clip(v, 0.0, 1.0)

    cell = spec.cell_px
    left = 12 + 7 * max((len(s) for s in spec.row_labels), default=0)
    top = (28 if spec.title else 8) + 7 * max((len(s) for s in spec.col_labels), default=0)
    width = left + cell * n_cols + 10
    height = top + cell * n_rows + 10

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
    ]
    if spec.title:
        out.append(f'<text class="title" x="{width / 2:.1f}" y="18" text-anchor="middle" '
                   f'{FONT} font-size="14">{escape(spec.title)}</text>')
    for j, label in enumerate(spec.col_labels):
        x = left + cell * j + cell / 2
        out.append(f'<text class="col-label" x="{x:.1f}" y="{top - 6}" {FONT} font-size="11" '
                   f'transform="rotate(-60 {x:.1f} {top - 6})">{escape(label)}</text>')
    for i, label in enumerate(spec.row_labels):
        y = top + cell * i + cell / 2 + 4
        out.append(f'<text class="row-label" x="{left - 6}" y="{y:.1f}" text-anchor="end" '
                   f'{FONT} font-size="11">{escape(label)}</text>')
    for i in range(n_rows):
        for j in range(n_cols):
            fill = interpolate_color(spec.low_color, spec.high_color, float(v[i, j]))
            out.append(f'<rect class="cell" x="{left + cell * j}" y="{top + cell * i}" '
                       f'width="{cell}" height="{cell}" fill="{fill}" data-value="{v[i, j]:.6f}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_f1_plot(result, baseline: float = 0.1, title: str | None = None) -> str:
    """Box plot of per-run F1 for each class: quartile box, min/max whiskers,
    mean marker, and one dashed reference line at ``baseline``."""
    f1 = np.asarray(result.f1, dtype=float)
    if f1.ndim != 2 or f1.shape[0] == 0 or f1.shape[1] == 0:
        raise ValueError("F1 plot needs at least one run")
    names = list(result.class_names)
    cfg = getattr(result, "config", None)
    if title is None:
        title = "Per-storyteller F1"
        if cfg is not None:
            title += f" ({cfg.vocab_mode} vocabulary, {cfg.classifier_mode}, n={f1.shape[0]})"

    plot_h, slot = 300, 56
    left, top, bottom = 50, 36, 70
    width = left + slot * len(names) + 20
    height = top + plot_h + bottom

    def y(val: float) -> float:
        return top + plot_h * (1.0 - val)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<text class="title" x="{width / 2:.1f}" y="20" text-anchor="middle" {FONT} '
        f'font-size="14">{escape(title)}</text>',
        f'<line class="axis" x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="#000"/>',
    ]
    for tick in np.linspace(0, 1, 6):
        out.append(f'<line class="tick" x1="{left - 4}" y1="{_num(y(tick))}" x2="{left}" '
                   f'y2="{_num(y(tick))}" stroke="#000"/>')
        out.append(f'<text class="tick-label" x="{left - 6}" y="{_num(y(tick) + 4)}" text-anchor="end" '
                   f'{FONT} font-size="10">{tick:.1f}</text>')
    out.append(f'<text class="axis-label" x="14" y="{top + plot_h / 2:.1f}" {FONT} font-size="11" '
               f'transform="rotate(-90 14 {top + plot_h / 2:.1f})" text-anchor="middle">F1</text>')

    for c, name in enumerate(names):
        col = f1[:, c]
        q1, med, q3 = np.percentile(col, [25, 50, 75])
        lo, hi, mean = col.min(), col.max(), col.mean()
        cx = left + slot * c + slot / 2
        half = slot * 0.3
        out.append(f'<g class="box-group" data-label={quoteattr(name)} data-mean="{mean:.6f}">')
        out.append(f'<line class="whisker" x1="{_num(cx)}" y1="{_num(y(hi))}" x2="{_num(cx)}" '
                   f'y2="{_num(y(q3))}" stroke="#333"/>')
        out.append(f'<line class="whisker" x1="{_num(cx)}" y1="{_num(y(q1))}" x2="{_num(cx)}" '
                   f'y2="{_num(y(lo))}" stroke="#333"/>')
        for val in (lo, hi):
            out.append(f'<line class="whisker-cap" x1="{_num(cx - half / 2)}" y1="{_num(y(val))}" '
                       f'x2="{_num(cx + half / 2)}" y2="{_num(y(val))}" stroke="#333"/>')
        out.append(f'<rect class="box" x="{_num(cx - half)}" y="{_num(y(q3))}" width="{_num(2 * half)}" '
                   f'height="{_num(y(q1) - y(q3))}" fill="#9ecae1" stroke="#333"/>')
        out.append(f'<line class="median" x1="{_num(cx - half)}" y1="{_num(y(med))}" '
                   f'x2="{_num(cx + half)}" y2="{_num(y(med))}" stroke="#08306b" stroke-width="2"/>')
        out.append(f'<circle class="mean" cx="{_num(cx)}" cy="{_num(y(mean))}" r="2.5" fill="#d62728"/>')
        out.append(f'<text class="group-label" x="{_num(cx)}" y="{top + plot_h + 14}" {FONT} font-size="11" '
                   f'text-anchor="end" transform="rotate(-40 {_num(cx)} {top + plot_h + 14})">'
                   f'{escape(name)}</text>')
        out.append("</g>")

    out.append(f'<line class="baseline" x1="{left}" y1="{_num(y(baseline))}" x2="{left + slot * len(names)}" '
               f'y2="{_num(y(baseline))}" stroke="#c00" stroke-dasharray="4 3" data-value="{baseline}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
