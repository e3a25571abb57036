"""CSV and SVG output, and trace CSV input.

CSV files start with ``#`` comment lines recording tool version, config hash
and seed, followed by one header line and comma-separated rows.  Numbers are
written with ``repr``-exact 17 significant digits, so identical inputs give
byte-identical files.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from . import __version__
from .errors import ValidationError
from .trace import TimeTrace

FLOAT_FMT = "{:.17g}"


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT.format(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def header_lines(config_hash, seed, extra=None):
    lines = [f"# tool: nvmag {__version__}", f"# config_hash: {config_hash}", f"# seed: {seed}"]
    for k, v in (extra or {}).items():
        lines.append(f"# {k}: {_fmt(v)}")
    return lines


def write_csv(path, columns, rows, *, config_hash="none", seed="none", meta=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = header_lines(config_hash, seed, meta)
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValidationError("row length does not match header")
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_table(path, columns, arrays, **kw):
    """Write equal-length column arrays."""
    return write_csv(path, columns, zip(*arrays), **kw)


def _cell(text):
    try:
        return float(text)
    except ValueError:
        return text.strip()


def read_csv(path):
    """Return ``(meta, columns, data)``.

    ``data`` is a float array, or an object array when some cells are text
    (e.g. quantity/value/unit tables).
    """
    meta, body = {}, []
    columns = None
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            key, sep, val = line[1:].partition(":")
            if sep:
                meta[key.strip()] = val.strip()
            continue
        if columns is None:
            columns = [c.strip() for c in line.split(",")]
            continue
        body.append([_cell(x) for x in line.split(",")])
    if columns is None:
        raise ValidationError(f"{path}: no header line")
    numeric = all(isinstance(v, float) for row in body for v in row)
    data = np.array(body, dtype=float if numeric else object).reshape(-1, len(columns))
    return meta, columns, data


def write_trace(path, trace: TimeTrace, *, config_hash="none", meta=None):
    meta = {"units": trace.units, "sample_rate_hz": float(trace.sample_rate), **(meta or {})}
    return write_table(path, ["time_s", "value"], [trace.times, trace.samples],
                       config_hash=config_hash, seed=trace.seed if trace.seed is not None else "none", meta=meta)


def read_trace(path) -> TimeTrace:
    try:
        meta, cols, data = read_csv(path)
    except (OSError, ValueError) as exc:
        raise ValidationError(f"cannot read trace {path}: {exc}") from None
    if cols != ["time_s", "value"] or data.dtype != float:
        raise ValidationError(f"{path}: expected numeric columns time_s,value")
    if data.shape[0] < 2:
        raise ValidationError(f"{path}: fewer than two samples")
    if "sample_rate_hz" in meta:
        fs = float(meta["sample_rate_hz"])
    else:
        dt = np.diff(data[:, 0])
        if np.any(dt <= 0) or np.ptp(dt) > 1e-6 * dt.mean():
            raise ValidationError(f"{path}: samples are not uniformly spaced")
        fs = 1.0 / dt.mean()
    units = meta.get("units", "volts")
    seed = meta.get("seed")
    seed = int(seed) if seed not in (None, "none") else None
    extra = {k: v for k, v in meta.items() if k not in ("units", "seed", "sample_rate_hz", "tool", "config_hash")}
    return TimeTrace(data[:, 1], fs, units, seed, extra)


_RAMP = np.array([
    [68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37],
], dtype=float)


def _color(t):
    t = min(max(float(t), 0.0), 1.0) * (len(_RAMP) - 1)
    i = min(int(t), len(_RAMP) - 2)
    c = _RAMP[i] + (t - i) * (_RAMP[i + 1] - _RAMP[i])
    return "#%02x%02x%02x" % tuple(int(round(x)) for x in c)


def heatmap_svg(path, x_axis, y_axis, values, *, x_label="x", y_label="y", title=""):
    """Cell heatmap; rows of ``values`` follow ``y_axis`` (drawn bottom to top)."""
    values = np.asarray(values, dtype=float)
    ny, nx = values.shape
    cell, left, top = 20, 70, 30
    w, h = left + nx * cell + 20, top + ny * cell + 50
    lo, hi = float(values.min()), float(values.max())
    span = hi - lo or 1.0
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">']
    if title:
        out.append(f'<text x="{left}" y="18" font-size="12">{title}</text>')
    for i in range(ny):
        for j in range(nx):
            y = top + (ny - 1 - i) * cell
            x = left + j * cell
            out.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                       f'fill="{_color((values[i, j] - lo) / span)}"/>')
    base = top + ny * cell
    out.append(f'<text x="{left}" y="{base + 30}" font-size="11">{x_label}: '
               f'{_fmt(x_axis[0])} .. {_fmt(x_axis[-1])}</text>')
    out.append(f'<text x="4" y="{top - 6}" font-size="11">{y_label}: '
               f'{_fmt(y_axis[0])} .. {_fmt(y_axis[-1])}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
    return path


def polyline_svg(path, x, y, *, logx=False, logy=False, title=""):
    """Single data-driven polyline, optional log axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if logx:
        x = np.log10(x)
    if logy:
        y = np.log10(y)
    w, h, pad = 480, 320, 30
    xs = (x - x.min()) / ((np.ptp(x)) or 1.0) * (w - 2 * pad) + pad
    ys = h - pad - (y - y.min()) / ((np.ptp(y)) or 1.0) * (h - 2 * pad)
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(xs, ys))
    body = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">']
    if title:
        body.append(f'<text x="{pad}" y="18" font-size="12">{title}</text>')
    body.append(f'<polyline fill="none" stroke="black" stroke-width="1" points="{pts}"/>')
    body.append("</svg>")
    Path(path).write_text("\n".join(body) + "\n")
    return path
