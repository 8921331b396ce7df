"""CSV tables and dependency-free SVG line plots."""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Sequence
from xml.sax.saxutils import escape

OUTAGE_HEADER = ("scenario", "policy", "user", "snr_db", "p_hat", "ci_low", "ci_high", "trials")
CONNECTIVITY_HEADER = ("variant", "k_pgfu", "rho", "mean_served", "ci_low", "ci_high", "slots")
DOWNLINK_HEADER = ("cluster", "status", "sensor", "broadband", "sensor_gain", "broadband_gain",
                   "eps_sensor", "eps_broadband", "p_sensor", "p_broadband", "required_total")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


@dataclass
class CsvTable:
    header: tuple[str, ...]
    rows: list[list] = field(default_factory=list)

    def add(self, *values):
        if len(values) != len(self.header):
            raise ValueError(f"row has {len(values)} columns, header has {len(self.header)}")
        self.rows.append(list(values))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header)
        for row in self.rows:
            writer.writerow([fmt(v) for v in row])
        return buf.getvalue()

    def column(self, name: str) -> list:
        i = self.header.index(name)
        return [row[i] for row in self.rows]

    def records(self) -> list[dict]:
        return [dict(zip(self.header, row)) for row in self.rows]


def read_csv(text: str) -> CsvTable:
    """Parse a table written by :meth:`CsvTable.to_csv`; numeric cells become int/float."""
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader))
    table = CsvTable(header)
    for row in reader:
        table.rows.append([_parse_cell(c) for c in row])
    return table


def _parse_cell(cell: str):
    if cell == "":
        return None
    for kind in (int, float):
        try:
            return kind(cell)
        except ValueError:
            pass
    return cell


def write_atomic(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- SVG ----------------------------------------------------------------------

LOG_FLOOR = 1e-7
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")
_W, _H = 640, 420
_L, _R, _T, _B = 70, 170, 40, 50


@dataclass(frozen=True)
class AxesSpec:
    x: str
    y: str
    series: tuple[str, ...]
    log_y: bool = False
    title: str = ""
    x_label: str | None = None
    y_label: str | None = None


def _num(v: float) -> str:
    return f"{v:.2f}"


def render_svg(table: CsvTable, axes: AxesSpec) -> str:
    if not table.rows:
        raise ValueError("cannot plot an empty table")
    recs = table.records()
    groups: dict[tuple, list[tuple[float, float]]] = {}
    for r in recs:
        key = tuple(r[s] for s in axes.series)
        groups.setdefault(key, []).append((float(r[axes.x]), float(r[axes.y])))

    clamped = False
    if axes.log_y:
        for key, pts in groups.items():
            fixed = []
            for x, y in pts:
                if y < LOG_FLOOR:
                    clamped = True
                    y = LOG_FLOOR
                fixed.append((x, math.log10(y)))
            groups[key] = fixed

    xs = [x for pts in groups.values() for x, _ in pts]
    ys = [y for pts in groups.values() for _, y in pts]
    x0, x1 = min(xs), max(xs)
    if axes.log_y:
        y0, y1 = math.floor(min(ys)), max(math.ceil(max(ys)), math.floor(min(ys)) + 1)
    else:
        y0, y1 = min(0.0, min(ys)), max(ys)
        if y1 == y0:
            y1 = y0 + 1.0
    if x1 == x0:
        x0, x1 = x0 - 1.0, x1 + 1.0

    pw, ph = _W - _L - _R, _H - _T - _B

    def px(x):
        return _L + (x - x0) / (x1 - x0) * pw

    def py(y):
        return _T + ph - (y - y0) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_L}" y="{_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if axes.title:
        out.append(f'<text x="{_L + pw / 2:.2f}" y="{_T - 15}" text-anchor="middle" font-size="13">'
                   f'{escape(axes.title)}</text>')

    for i in range(6):
        xv = x0 + (x1 - x0) * i / 5
        out.append(f'<line x1="{_num(px(xv))}" y1="{_T + ph}" x2="{_num(px(xv))}" y2="{_T + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_num(px(xv))}" y="{_T + ph + 18}" text-anchor="middle">{xv:.4g}</text>')
    if axes.log_y:
        yticks = [(float(e), f"1e{e}") for e in range(int(y0), int(y1) + 1)]
    else:
        yticks = [(y0 + (y1 - y0) * i / 5, f"{y0 + (y1 - y0) * i / 5:.4g}") for i in range(6)]
    for yv, label in yticks:
        out.append(f'<line x1="{_L - 5}" y1="{_num(py(yv))}" x2="{_L}" y2="{_num(py(yv))}" stroke="black"/>')
        out.append(f'<line x1="{_L}" y1="{_num(py(yv))}" x2="{_L + pw}" y2="{_num(py(yv))}" '
                   f'stroke="#dddddd" stroke-width="0.5"/>')
        out.append(f'<text x="{_L - 8}" y="{_num(py(yv) + 4)}" text-anchor="end">{label}</text>')

    out.append(f'<text x="{_L + pw / 2:.2f}" y="{_H - 10}" text-anchor="middle">'
               f'{escape(axes.x_label or axes.x)}</text>')
    out.append(f'<text x="15" y="{_T + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 15 {_T + ph / 2:.2f})">{escape(axes.y_label or axes.y)}</text>')

    for idx, (key, pts) in enumerate(groups.items()):
        colour = _PALETTE[idx % len(_PALETTE)]
        pts = sorted(pts)
        coords = " ".join(f"{_num(px(x))},{_num(py(y))}" for x, y in pts)
        if len(pts) > 1:
            out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{coords}"/>')
        for x, y in pts:
            out.append(f'<circle cx="{_num(px(x))}" cy="{_num(py(y))}" r="2.5" fill="{colour}"/>')
        ly = _T + 10 + 16 * idx
        out.append(f'<line x1="{_L + pw + 10}" y1="{ly}" x2="{_L + pw + 30}" y2="{ly}" '
                   f'stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{_L + pw + 35}" y="{ly + 4}">{escape(" / ".join(str(k) for k in key))}</text>')

    if clamped:
        out.append(f'<text x="{_L + 5}" y="{_T + ph - 5}" font-style="italic" fill="#555555">'
                   f'zero estimates drawn at {LOG_FLOOR:g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
