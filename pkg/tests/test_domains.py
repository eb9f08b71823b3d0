from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asl.domains import (DOMAINS, POLYTOPES, contains, eval_piece, get_domain, get_polytope,
                         polytope_contains)
from asl.errors import CollarError


@pytest.mark.parametrize("j, i, point, expected", [
    (1, 1, (0, 0), F(5, 8)),
    (2, 2, (F(1, 3), F(1, 3)), 0),
    (1, 2, (F(-2, 3), F(-1, 6)), 0),
])
def test_eval_piece_exact(j, i, point, expected):
    assert eval_piece(j, i, point) == expected


def test_eval_piece_float_matches_exact():
    for dom in DOMAINS.values():
        for pc in dom.pieces:
            p = (F(1, 7), F(-2, 9))
            assert abs(eval_piece(dom.index, pc.index, (float(p[0]), float(p[1])))
                       - float(pc.exact(*p))) < 1e-15


def test_eval_piece_bad_index():
    with pytest.raises(IndexError):
        eval_piece(2, 5, (0.0, 0.0))
    with pytest.raises(IndexError):
        eval_piece(4, 1, (0.0, 0.0))


def test_contains_examples():
    assert contains(1, (0, 0))
    assert contains(2, (0, 0))
    assert not contains(2, (1, 1))
    assert all(np.isclose(get_domain(1).rho(0.0, 0.0), 5 / 8))
    assert all(np.isclose(get_domain(2).rho(0.0, 0.0), 1 / 2))


def test_concavity_of_every_piece():
    for dom in DOMAINS.values():
        for pc in dom.pieces:
            assert max(pc.quadratic_part_eigenvalues()) <= 1e-15


def test_piece_counts_and_tokens():
    assert [d.n_pieces for d in DOMAINS.values()] == [3, 4, 6]
    assert get_domain("omega3") is DOMAINS[3]
    assert get_polytope("square2") is POLYTOPES[2]
    with pytest.raises(KeyError):
        get_domain("square1")


@pytest.mark.parametrize("j, vertices", [
    (1, {(-1, -1), (2, -1), (-1, 2)}),
    (2, {(1, 1), (1, -1), (-1, 1), (-1, -1)}),
    (3, {(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)}),
])
def test_polytope_vertices(j, vertices):
    P = get_polytope(j)
    assert set(P.vertices) == vertices
    for u, v in P.vertices:
        active = [hp for hp in P.halfplanes if hp.a * u + hp.b * v == hp.c]
        assert len(active) == 2


def test_polytope_contains_examples():
    assert polytope_contains(2, (0, 0))
    assert not polytope_contains(1, (2, -1))
    assert not polytope_contains(3, (0.9, 0.2))


def test_omega3_central_symmetry_by_coefficients():
    dom = DOMAINS[3]
    negated = {pc.negated().coefficients for pc in dom.pieces}
    assert negated == {pc.coefficients for pc in dom.pieces}
    assert dom.is_centrally_symmetric()


def test_omega2_symmetries():
    dom = DOMAINS[2]
    assert {pc.swapped().coefficients for pc in dom.pieces} == {pc.coefficients for pc in dom.pieces}
    assert dom.is_swap_symmetric() and dom.is_centrally_symmetric()


@settings(max_examples=200, deadline=None)
@given(st.floats(-0.8, 0.8), st.floats(-0.8, 0.8))
def test_omega3_contains_is_symmetric(s, t):
    assert contains(3, (s, t)) == contains(3, (-s, -t))


@settings(max_examples=200, deadline=None)
@given(st.floats(-0.8, 0.8), st.floats(-0.8, 0.8))
def test_omega2_contains_is_swap_symmetric(s, t):
    assert contains(2, (s, t)) == contains(2, (t, s)) == contains(2, (-s, -t))


@pytest.mark.parametrize("j", [1, 2, 3])
def test_boundary_sample_contract(j):
    dom = get_domain(j)
    pts, pieces, normals = dom.boundary_sample(400)
    rho = dom.rho(pts[:, 0], pts[:, 1])
    own = rho[np.arange(len(pts)), pieces - 1]
    assert np.abs(own).max() < 1e-12
    assert rho.min() > -1e-12
    assert np.allclose(np.hypot(*normals.T), 1.0)
    # outward: stepping along the normal leaves, stepping against it enters
    assert not np.any(dom.contains(*(pts + 1e-6 * normals).T))
    assert np.all(dom.contains(*(pts - 1e-6 * normals).T))
    # counterclockwise: the polar angle about an interior point increases
    c = np.array(dom.anchor, dtype=float)
    ang = np.unwrap(np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0]))
    assert np.all(np.diff(ang) > 0)


def test_boundary_sample_examples():
    pts, pieces, _ = get_domain(2).boundary_sample(4)
    on22 = pts[pieces == 2]
    assert np.any(np.hypot(on22[:, 0] - 0.5, on22[:, 1]) < 1e-12)
    pts, pieces, _ = get_domain(1).boundary_sample(100)
    assert not np.any(get_domain(1).contains(*pts.T))
    assert np.abs(get_domain(1).rho(*pts.T)).min(axis=-1).max() < 1e-10
    _, pieces, _ = get_domain(3).boundary_sample(600)
    transitions = np.count_nonzero(pieces != np.roll(pieces, 1))
    assert transitions == 6
    assert set(pieces) == {1, 2, 3, 4, 5, 6}


def test_boundary_sample_count_precondition():
    with pytest.raises(ValueError):
        get_domain(3).boundary_sample(5)


@pytest.mark.parametrize("j", [1, 2, 3])
def test_curvature_positive(j):
    dom = get_domain(j)
    pts, pieces, _ = dom.boundary_sample(1000)
    assert dom.boundary_curvature(pts, pieces).min() > 0


def test_curvature_on_rho22_matches_implicit_formula():
    # rho = 1/2 - s - 3/2 t^2: grad = (-1, -3t), Hess = diag(0, -3)
    dom = get_domain(2)
    t = 0.2
    p = np.array([[0.5 - 1.5 * t * t, t]])
    kappa = dom.boundary_curvature(p, np.array([2]))[0]
    assert kappa == pytest.approx(3 / (1 + 9 * t * t) ** 1.5, rel=1e-12)


def test_exact_corners_are_double_zeros_with_matching_gradients():
    for dom in DOMAINS.values():
        corners = dom.exact_corners()
        assert len(corners) == dom.n_pieces
        for (s, t), a, b in corners:
            assert dom.piece(a).exact(s, t) == 0 == dom.piece(b).exact(s, t)
            ga = dom.piece(a).gradient(float(s), float(t))
            gb = dom.piece(b).gradient(float(s), float(t))
            assert np.allclose(ga, gb, atol=1e-9)


def test_stitched_rho_on_piece_interior():
    dom = get_domain(1)
    p = np.array([[-2 / 3, -1 / 6]])
    val, grad, pieces = dom.stitched_rho(p)
    assert pieces[0] == 2
    assert abs(val[0]) < 1e-15
    assert np.allclose(grad[0], dom.piece(2).gradient(*p[0]))


def test_stitched_rho_first_order_along_normal():
    dom = get_domain(2)
    p = np.array([0.5, 0.0])
    g = np.asarray(dom.piece(2).gradient(*p), dtype=float)
    n = g / np.linalg.norm(g)
    for delta in (1e-3, 1e-4):
        val, _, _ = dom.stitched_rho((p + delta * n)[None])
        assert val[0] == pytest.approx(delta * np.linalg.norm(g), rel=1e-3)


def test_stitched_rho_gradient_continuous_at_omega3_corners():
    dom = get_domain(3)
    for (s, t), a, b in dom.exact_corners():
        p = np.array([float(s), float(t)])
        ga = np.asarray(dom.piece(a).gradient(*p), dtype=float)
        gb = np.asarray(dom.piece(b).gradient(*p), dtype=float)
        assert np.abs(ga - gb).max() < 1e-9


def test_stitched_rho_collar_error():
    with pytest.raises(CollarError):
        get_domain(2).stitched_rho(np.array([[0.0, 0.0]]))


def test_bounding_box_and_diameter():
    smin, smax, tmin, tmax = get_domain(2).bounding_box
    assert (smin, smax, tmin, tmax) == pytest.approx((-0.5, 0.5, -0.5, 0.5))
    # widest chord joins the bulges of the rho_22 and rho_42 arcs at (1/2, 0) and (-1/2, 0)
    assert get_domain(2).diameter == pytest.approx(1.0, rel=1e-6)
