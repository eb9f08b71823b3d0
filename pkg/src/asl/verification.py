"""Closed-form residual suites for the two exactly solvable cases."""

from __future__ import annotations

import numpy as np

from .closed_forms import (H_field, h_field, residual_eq11, residual_eq13, residual_eq21,
                           residual_eq211)
from .domains import get_polytope
from .transforms import composite_psi, phi_field_from_psi

# CLI case names: the projective plane and the product of two lines
CASES = {"p2": 1, "p1xp1": 2}
# half-width of the (x, y) square on which h is checked
XY_EXTENT = 5.0
# minimum slack of polygon sample points, relative to the polygon size
POLYGON_MARGIN = 0.02


def case_index(case):
    if isinstance(case, int):
        if case not in CASES.values():
            raise KeyError(case)
        return case
    return CASES[case]


def xy_grid(N, extent=XY_EXTENT):
    xs = np.linspace(-extent, extent, N)
    return np.meshgrid(xs, xs, indexing="ij")


def polygon_grid(j, N, margin=POLYGON_MARGIN):
    """Points of an ``N x N`` lattice over the polygon's bounding box lying well inside it."""
    P = get_polytope(j)
    vs = np.array([[float(a), float(b)] for a, b in P.vertices])
    lo, hi = vs.min(axis=0), vs.max(axis=0)
    U, V = np.meshgrid(np.linspace(lo[0], hi[0], N), np.linspace(lo[1], hi[1], N), indexing="ij")
    slack = np.min([hp.slack(U, V) / np.hypot(hp.a, hp.b) for hp in P.halfplanes], axis=0)
    keep = slack > margin * (hi - lo).max()
    return U[keep], V[keep]


def residual_suite(case, N=50):
    """Max residuals of the four equations for one solvable case.

    ``res_21``: Einstein equation for ``h`` on a square of the ``(x, y)`` plane.
    ``res_211``: dual equation for ``H`` on polygon lattice points.
    ``res_13`` and ``res_11``: bordered and ``phi``-form equations for the
    composite dual potential, at the gradient images of the same points.
    """
    j = case_index(case)
    X, Y = xy_grid(N)
    U, V = polygon_grid(j, N)
    H = H_field(j)
    S, T = H.gradient(U, V)
    psi = composite_psi(j)
    phi = phi_field_from_psi(psi)
    return {
        "res_21": float(np.abs(residual_eq21(h_field(j), X, Y)).max()),
        "res_211": float(np.abs(residual_eq211(H, U, V)).max()),
        "res_13": float(np.abs(residual_eq13(psi, S, T)).max()),
        "res_11": float(np.abs(residual_eq11(phi, 0.5, S, T)).max()),
    }
