"""Kähler-Ricci soliton sector: residual operators and the constant ``alpha``.

``alpha`` is the nonzero root of::

    F(alpha) = (2 - alpha^2) e^(3 alpha) - 4 e^(2 alpha) + 2 (1 + alpha)

``F`` has a triple root at 0 (``F ~ 2 alpha^3 / 3``), so brackets must stay
away from the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .closed_forms import AnalyticField
from .domains import HalfPlane, Polytope
from .errors import BracketError, ParameterError, PreconditionError

SCAN_RANGE = (0.1, 1.0)
SCAN_STEP = 0.01
TOL = 1e-12

SOLITON_POLYGON = Polytope(
    4, "soliton", ((1, 0), (0, 1), (-1, 1), (-1, -1), (1, -1)),
    (HalfPlane(1, 1, 1), HalfPlane(-1, 0, 1), HalfPlane(0, -1, 1), HalfPlane(1, 0, 1), HalfPlane(0, 1, 1)))


@dataclass(frozen=True)
class SolitonAlpha:
    alpha: float
    residual: float
    bracket: tuple

    def to_json(self):
        return {"alpha": self.alpha, "residual": self.residual, "bracket": list(self.bracket)}


def compatibility(alpha):
    """``F(alpha)``; for large positive ``alpha`` the leading exponential is factored out."""
    a = float(alpha)
    if a > 20.0:
        g = (2.0 - a * a) - 4.0 * math.exp(-a) + 2.0 * (1.0 + a) * math.exp(-3.0 * a)
        try:
            return math.exp(3.0 * a) * g
        except OverflowError:
            return math.copysign(math.inf, g)
    return (2.0 - a * a) * math.exp(3.0 * a) - 4.0 * math.exp(2.0 * a) + 2.0 * (1.0 + a)


def compatibility_derivative(alpha):
    a = float(alpha)
    return (6.0 - 2.0 * a - 3.0 * a * a) * math.exp(3.0 * a) - 8.0 * math.exp(2.0 * a) + 2.0


def scan_bracket(lo=SCAN_RANGE[0], hi=SCAN_RANGE[1], step=SCAN_STEP):
    """First sign change of ``F`` on the grid ``lo, lo + step, ..., hi``."""
    n = int(round((hi - lo) / step))
    grid = [lo + k * step for k in range(n + 1)]
    values = [compatibility(a) for a in grid]
    for a, b, fa, fb in zip(grid, grid[1:], values, values[1:]):
        if fa * fb < 0:
            return (round(a, 12), round(b, 12))
    raise BracketError(f"no sign change of F on [{lo}, {hi}] with step {step}")


def solve_alpha(bracket=None) -> SolitonAlpha:
    """Nonzero root of ``F`` by bisection, polished by Newton inside the bracket.

    ``bracket=None`` scans ``(0.1, 1.0)`` in steps of 0.01 for a sign change.
    """
    if bracket is None:
        bracket = scan_bracket()
    lo, hi = (float(x) for x in bracket)
    if not lo < hi:
        raise PreconditionError(f"empty bracket ({lo}, {hi})")
    if lo <= 0.0 <= hi:
        raise PreconditionError("bracket contains the trivial root alpha = 0")
    flo, fhi = compatibility(lo), compatibility(hi)
    if not flo * fhi < 0:
        raise BracketError(f"F does not change sign on ({lo}, {hi}): F = {flo:.3e}, {fhi:.3e}")
    a, b, fa = lo, hi, flo
    while True:
        mid = 0.5 * (a + b)
        if mid in (a, b):
            break
        fm = compatibility(mid)
        if fm == 0.0:
            a = b = mid
            break
        if (fm < 0) == (fa < 0):
            a, fa = mid, fm
        else:
            b = mid
    x = 0.5 * (a + b)
    for _ in range(3):
        step = compatibility(x) / compatibility_derivative(x)
        if not lo <= x - step <= hi:
            break
        x -= step
    res = compatibility(x)
    if not abs(res) < TOL:
        raise BracketError(f"root polish failed: |F| = {abs(res):.3e}")
    return SolitonAlpha(x, abs(res), (lo, hi))


def soliton_residual_h(h: AnalyticField, x, y, alpha):
    """``det Hess h - exp(-h - alpha (h_x + h_y))``."""
    hxx, hxy, hyy = h.hessian(x, y)
    hx, hy = h.gradient(x, y)
    return hxx * hyy - hxy * hxy - np.exp(-h.value(x, y) - alpha * (hx + hy))


def soliton_residual_H(H: AnalyticField, u, v, alpha):
    """Residual of the dual soliton equation for ``H`` at ``(u, v)``.

    No containment check is made; the operator is evaluated wherever ``H`` is.
    """
    if alpha == 0:
        raise ParameterError("the dual soliton operator is singular at alpha = 0")
    u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    Hval = H.value(u, v)
    Hu, Hv = H.gradient(u, v)
    Huu, Huv, Hvv = H.hessian(u, v)
    a = alpha
    m11 = Hvv + 2 * a * Hv + a * a * Hval - u / a
    m12 = Huv + a * Hv + a * Hu + a * a * Hval - 1 / (a * a)
    m22 = Huu + 2 * a * Hu + a * a * Hval - v / a
    rhs = Hval - u * (Hu + a * Hval) - v * (Hv + a * Hval) + u * v / (a * a)
    return m11 * m22 - m12 * m12 - rhs
