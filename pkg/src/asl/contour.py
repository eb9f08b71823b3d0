"""Contour plots of scattered ``s,t,value`` samples as plain SVG."""

from __future__ import annotations

import csv
import io
import warnings

import numpy as np
from scipy.interpolate import griddata
from scipy.spatial import ConvexHull
from skimage.measure import find_contours

from .errors import ParseError

SVG_SIZE = 512
MARGIN = 16


class ContourWarning(UserWarning):
    pass


def read_field_csv(path):
    """Read ``s,t,<name>`` rows; returns ``(points, values, name)``.

    Raises :class:`ParseError` naming the offending line.
    """
    with open(path, newline="") as fh:
        text = fh.read()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ParseError(f"{path}: line 1: empty file")
    header = [c.strip() for c in rows[0]]
    if len(header) != 3 or header[:2] != ["s", "t"]:
        raise ParseError(f"{path}: line 1: expected header 's,t,<value>', got {','.join(header)!r}")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ParseError(f"{path}: line {lineno}: expected 3 fields, got {len(row)}")
        try:
            data.append([float(x) for x in row])
        except ValueError as exc:
            raise ParseError(f"{path}: line {lineno}: {exc}") from None
    if len(data) < 3:
        raise ParseError(f"{path}: line {len(rows) + 1}: need at least three data rows")
    data = np.asarray(data)
    if not np.all(np.isfinite(data)):
        bad = int(np.argwhere(~np.isfinite(data).all(axis=1))[0, 0]) + 2
        raise ParseError(f"{path}: line {bad}: non-finite value")
    return data[:, :2], data[:, 2], header[2]


def boundary_polyline(points):
    """Convex hull of the samples, counterclockwise from the lowest-index vertex."""
    hull = ConvexHull(points)
    return points[hull.vertices]


def contour_lines(points, values, levels, resolution=None):
    """Marching-squares level curves of the samples, interpolated onto a square lattice.

    Returns ``{level: [polyline, ...]}`` in physical coordinates.  Levels with
    no crossing map to an empty list and raise a :class:`ContourWarning`.
    """
    n = resolution or int(np.clip(2 * np.sqrt(len(points)), 64, 512))
    lo, hi = points.min(axis=0), points.max(axis=0)
    xs = np.linspace(lo[0], hi[0], n)
    ys = np.linspace(lo[1], hi[1], n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    Z = griddata(points, values, (X, Y), method="linear")
    mask = np.isfinite(Z)
    fill = np.nanmax(values) if np.any(np.isfinite(values)) else 0.0
    Z = np.where(mask, Z, fill)
    out = {}
    for level in levels:
        lines = []
        if np.nanmin(values) < level < np.nanmax(values):
            for c in find_contours(Z, level, mask=mask):
                lines.append(np.column_stack([np.interp(c[:, 0], np.arange(n), xs),
                                              np.interp(c[:, 1], np.arange(n), ys)]))
        if not lines:
            warnings.warn(f"level {level:g} is outside the sampled range; contour omitted",
                          ContourWarning, stacklevel=2)
        out[level] = lines
    return out


def _fmt(x):
    return f"{x:.4f}"


def render_svg(boundary, contours):
    lo = boundary.min(axis=0)
    hi = boundary.max(axis=0)
    scale = (SVG_SIZE - 2 * MARGIN) / max(hi - lo)

    def xy(p):
        # y axis points down in SVG
        return _fmt(MARGIN + (p[0] - lo[0]) * scale) + "," + _fmt(SVG_SIZE - MARGIN - (p[1] - lo[1]) * scale)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_SIZE}" height="{SVG_SIZE}" '
        f'viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">',
        '<polygon class="boundary" fill="none" stroke="black" stroke-width="1.5" points="'
        + " ".join(xy(p) for p in boundary) + '"/>',
    ]
    for level in sorted(contours):
        for k, line in enumerate(contours[level]):
            parts.append(f'<polyline class="contour" data-level="{level:g}" data-index="{k}" '
                         'fill="none" stroke="steelblue" stroke-width="1" points="'
                         + " ".join(xy(p) for p in line) + '"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def export_contour(csv_path, levels, svg_path):
    """Write the contour SVG; returns ``{level: number of curves}``."""
    points, values, _ = read_field_csv(csv_path)
    boundary = boundary_polyline(points)
    contours = contour_lines(points, values, list(levels))
    with open(svg_path, "w", newline="\n") as fh:
        fh.write(render_svg(boundary, contours))
    return {level: len(lines) for level, lines in contours.items()}
