import math
import time

import numpy as np
import pytest

from asl.closed_forms import AnalyticField, H_field, constant_field, h_field, residual_eq21
from asl.errors import BracketError, ParameterError, PreconditionError
from asl.soliton import (SOLITON_POLYGON, compatibility, compatibility_derivative, scan_bracket,
                         solve_alpha, soliton_residual_H, soliton_residual_h)

from conftest import convex_negative_field

ALPHA = 0.43474766354008

HALF_SQUARE = AnalyticField(
    "(x^2 + y^2)/2",
    lambda x, y: (np.asarray(x) ** 2 + np.asarray(y) ** 2) / 2,
    lambda x, y: np.stack([np.asarray(x, dtype=float), np.asarray(y, dtype=float)]),
    lambda x, y: np.stack([1.0 + 0 * np.asarray(x), 0 * np.asarray(x), 1.0 + 0 * np.asarray(x)]),
)


# -- the compatibility equation ------------------------------------------------------

def test_trivial_root_is_exact():
    assert compatibility(0.0) == 0.0


def test_signs():
    assert compatibility(0.40) > 0
    assert compatibility(0.46) < 0
    assert compatibility(1.0) == pytest.approx(math.e ** 3 - 4 * math.e ** 2 + 4, rel=1e-14)
    assert compatibility(1.0) < 0


def test_large_alpha_is_finite_or_signed_infinity():
    assert compatibility(30.0) < 0
    assert compatibility(400.0) == -math.inf


def test_derivative_matches_finite_difference():
    for a in (0.2, 0.43, 0.9):
        e = 1e-6
        fd = (compatibility(a + e) - compatibility(a - e)) / (2 * e)
        assert compatibility_derivative(a) == pytest.approx(fd, rel=1e-6)


def test_scan_bracket():
    lo, hi = scan_bracket()
    assert (lo, hi) == (0.43, 0.44)
    assert compatibility(lo) * compatibility(hi) < 0


def test_solve_alpha_default():
    start = time.perf_counter()
    res = solve_alpha()
    elapsed = time.perf_counter() - start
    assert res.alpha == pytest.approx(ALPHA, abs=1e-13)
    assert abs(compatibility(res.alpha)) < 1e-12 and res.residual < 1e-12
    assert res.bracket == (0.43, 0.44)
    assert elapsed < 0.1


def test_solve_alpha_wide_bracket():
    res = solve_alpha((0.40, 0.46))
    assert res.alpha == pytest.approx(0.43, abs=5e-3)
    assert res.residual < 1e-12


def test_solve_alpha_stable_under_refinement():
    a = solve_alpha().alpha
    for w in (1e-3, 1e-6, 1e-9):
        assert abs(solve_alpha((a - w, a + w)).alpha - a) < 1e-13


def test_solve_alpha_deterministic():
    assert solve_alpha().to_json() == solve_alpha().to_json()


def test_solve_alpha_errors():
    with pytest.raises(BracketError):
        solve_alpha((0.5, 0.9))
    with pytest.raises(PreconditionError):
        solve_alpha((-0.1, 0.5))
    with pytest.raises(PreconditionError):
        solve_alpha((0.5, 0.4))
    with pytest.raises(BracketError):
        scan_bracket(0.5, 1.0)


# -- residual operators --------------------------------------------------------------

def test_residual_h_examples():
    assert abs(soliton_residual_h(h_field(1), 0.3, -0.2, 0.0)) < 1e-12
    assert soliton_residual_h(HALF_SQUARE, 0.0, 0.0, 0.0) == pytest.approx(0.0, abs=1e-16)
    assert soliton_residual_h(HALF_SQUARE, 1.0, 0.0, 1.0) == pytest.approx(1 - math.exp(-1.5), abs=1e-15)


def test_residual_h_at_zero_alpha_is_the_einstein_operator(rng):
    for field in (h_field(1), h_field(2), convex_negative_field(rng)):
        x, y = rng.uniform(-0.5, 0.5, (2, 100))
        diff = soliton_residual_h(field, x, y, 0.0) - residual_eq21(field, x, y)
        assert np.abs(diff).max() < 1e-14


def test_residual_H_examples():
    zero = constant_field(0.0)
    assert soliton_residual_H(zero, 0.0, 0.0, 1.0) == pytest.approx(-1.0, abs=1e-15)
    assert soliton_residual_H(zero, 1.0, 1.0, 1.0) == pytest.approx(-1.0, abs=1e-15)


def test_residual_H_swap_symmetry(rng):
    u, v = rng.uniform(-0.9, 0.4, (2, 50))
    for H in (H_field(2), constant_field(0.3)):
        a = soliton_residual_H(H, u, v, ALPHA)
        b = soliton_residual_H(H, v, u, ALPHA)
        assert np.abs(a - b).max() < 1e-13 * (1 + np.abs(a).max())


def test_residual_H_zero_alpha():
    with pytest.raises(ParameterError):
        soliton_residual_H(H_field(2), 0.0, 0.0, 0.0)


def test_soliton_polygon():
    P = SOLITON_POLYGON
    assert len(P.vertices) == 5
    assert P.contains(0.0, 0.0)
    assert not P.contains(0.8, 0.8)
    for u, v in P.vertices:
        assert sum(hp.a * u + hp.b * v == hp.c for hp in P.halfplanes) == 2
