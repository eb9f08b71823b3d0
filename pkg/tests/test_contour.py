import re
import warnings

import numpy as np
import pytest
from skimage.measure import points_in_poly

from asl.contour import ContourWarning, contour_lines, export_contour, read_field_csv
from asl.errors import ParseError

from conftest import solved

LEVELS = (-0.2, -0.1, -0.05)


@pytest.fixture(scope="module")
def psi2_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("fields") / "psi2.csv"
    rows = solved(2, 64).field.rows()
    with open(path, "w", newline="\n") as fh:
        fh.write("s,t,psi\n")
        for s, t, v in rows:
            fh.write(f"{float(s)!r},{float(t)!r},{float(v)!r}\n")
    return path


def _polylines(svg):
    out = {}
    for level, pts in re.findall(r'data-level="([^"]+)"[^>]*points="([^"]+)"', svg):
        xy = np.array([[float(c) for c in p.split(",")] for p in pts.split()])
        out.setdefault(float(level), []).append(xy)
    return out


def test_read_field_csv(psi2_csv):
    points, values, name = read_field_csv(psi2_csv)
    assert name == "psi" and points.shape == (len(values), 2)
    assert values.min() < -0.2 and values.max() == 0.0


def test_nested_closed_curves(psi2_csv, tmp_path):
    svg_path = tmp_path / "psi2.svg"
    counts = export_contour(psi2_csv, LEVELS, svg_path)
    assert counts == {level: 1 for level in LEVELS}
    lines = _polylines(svg_path.read_text())
    curves = [lines[level][0] for level in LEVELS]
    for c in curves:
        assert np.allclose(c[0], c[-1])
    # each level set encloses the one below it
    for inner, outer in zip(curves, curves[1:]):
        assert np.all(points_in_poly(inner, outer))


def test_empty_levels_give_boundary_only(psi2_csv, tmp_path):
    svg_path = tmp_path / "empty.svg"
    assert export_contour(psi2_csv, [], svg_path) == {}
    svg = svg_path.read_text()
    assert svg.count("<polygon") == 1 and "<polyline" not in svg


def test_level_below_minimum_warns(psi2_csv, tmp_path):
    svg_path = tmp_path / "low.svg"
    with pytest.warns(ContourWarning, match="-0.5"):
        counts = export_contour(psi2_csv, [-0.5, -0.1], svg_path)
    assert counts == {-0.5: 0, -0.1: 1}
    assert 'data-level="-0.5"' not in svg_path.read_text()


def test_contour_lines_of_a_paraboloid():
    g = np.linspace(-1, 1, 41)
    S, T = np.meshgrid(g, g)
    pts = np.column_stack([S.ravel(), T.ravel()])
    vals = (pts ** 2).sum(axis=1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        (curve,) = contour_lines(pts, vals, [0.25])[0.25]
    assert np.abs(np.hypot(*curve.T) - 0.5).max() < 1e-2


@pytest.mark.parametrize("text, line", [
    ("s,t,psi\n0,0,0\n1,0,x\n0,1,0\n", 3),
    ("s,t,psi\n0,0,0\n1,0\n0,1,0\n", 3),
    ("x,y,psi\n0,0,0\n", 1),
    ("s,t,psi\n0,0,0\n1,0,0\n0,1,nan\n", 4),
])
def test_parse_errors_name_the_line(tmp_path, text, line):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(ParseError, match=f"line {line}:"):
        read_field_csv(path)


def test_output_is_byte_identical(psi2_csv, tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    export_contour(psi2_csv, LEVELS, a)
    export_contour(psi2_csv, LEVELS, b)
    assert a.read_bytes() == b.read_bytes()
