"""Exact potentials for the projective plane and the quadric, and pointwise residuals.

Fields are vectorised: ``value(x, y)`` broadcasts over arrays, ``gradient``
returns an array of shape ``(2, ...)`` and ``hessian`` one of shape
``(3, ...)`` holding ``(f_xx, f_xy, f_yy)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .domains import get_polytope
from .errors import DomainError, PreconditionError, SignError, UnsupportedError

DEFAULT_K = 0.5


@dataclass(frozen=True)
class AnalyticField:
    """Scalar function of two variables with exact derivatives.

    ``third`` (optional) returns ``(f_xxx, f_xxy, f_xyy, f_yyy)``.  ``order``
    is the truncation order for series-defined fields, ``None`` if exact.
    """

    label: str
    value: Callable
    gradient: Callable
    hessian: Callable
    third: Optional[Callable] = None
    order: Optional[int] = None
    jet_fn: Optional[Callable] = None

    def jet(self, x, y):
        """Value, gradient and Hessian in one call."""
        if self.jet_fn is not None:
            return self.jet_fn(x, y)
        return self.value(x, y), self.gradient(x, y), self.hessian(x, y)


def _arr(*xs):
    # floats are promoted to float64; extended precision input is kept
    return tuple(np.asarray(x, dtype=np.result_type(x, float)) for x in xs)


# -- Kähler potentials on R^2 ---------------------------------------------

def _h1_value(x, y):
    x, y = _arr(x, y)
    m = np.maximum(np.maximum(x, y), 0.0)
    lse = m + np.log(np.exp(-m) + np.exp(x - m) + np.exp(y - m))
    return -np.log(9.0) - x - y + 3 * lse


def _softmax_xy(x, y):
    m = np.maximum(np.maximum(x, y), 0.0)
    e0, ex, ey = np.exp(-m), np.exp(x - m), np.exp(y - m)
    tot = e0 + ex + ey
    return ex / tot, ey / tot


def _h1_gradient(x, y):
    x, y = _arr(x, y)
    px, py = _softmax_xy(x, y)
    return np.stack([-1 + 3 * px, -1 + 3 * py])


def _h1_hessian(x, y):
    x, y = _arr(x, y)
    px, py = _softmax_xy(x, y)
    return np.stack([3 * px * (1 - px), -3 * px * py, 3 * py * (1 - py)])


def _sigmoid(x):
    return 0.5 * (1 + np.tanh(0.5 * x))


def _h2_value(x, y):
    x, y = _arr(x, y)
    return -2 * np.log(2.0) - x - y + 2 * np.logaddexp(0, x) + 2 * np.logaddexp(0, y)


def _h2_gradient(x, y):
    x, y = _arr(x, y)
    return np.stack([np.tanh(0.5 * x), np.tanh(0.5 * y)])


def _h2_hessian(x, y):
    x, y = _arr(x, y)
    sx, sy = _sigmoid(x), _sigmoid(y)
    return np.stack([2 * sx * (1 - sx), np.zeros_like(x + y), 2 * sy * (1 - sy)])


# -- symplectic potentials on the polygons ----------------------------------

def _H1_value(u, v):
    u, v = _arr(u, v)
    # integer divisors only, so extended precision input is not rounded to float64
    return (u * v * (u + v) / 2 + u * u + u * v + v * v + 1) / 3


def _H1_gradient(u, v):
    u, v = _arr(u, v)
    return np.stack([(2 * u * v + v * v) / 6 + (2 * u + v) / 3,
                     (u * u + 2 * u * v) / 6 + (u + 2 * v) / 3])


def _H1_hessian(u, v):
    u, v = _arr(u, v)
    return np.stack([v / 3 + 2 / 3, (u + v) / 3 + 1 / 3, u / 3 + 2 / 3])


def _H1_third(u, v):
    u, v = _arr(u, v)
    z = np.zeros_like(u + v)
    return np.stack([z, z + 1 / 3, z + 1 / 3, z])


def _H2_value(u, v):
    u, v = _arr(u, v)
    return (3 * (u * u + v * v) - u * u * v * v + 3) / 12


def _H2_gradient(u, v):
    u, v = _arr(u, v)
    return np.stack([u / 2 - u * v * v / 6, v / 2 - u * u * v / 6])


def _H2_hessian(u, v):
    u, v = _arr(u, v)
    return np.stack([0.5 - v * v / 6, -u * v / 3, 0.5 - u * u / 6])


def _H2_third(u, v):
    u, v = _arr(u, v)
    z = np.zeros_like(u + v)
    return np.stack([z, -v / 3, -u / 3, z])


def _psi1_value(u, v):
    u, v = _arr(u, v)
    return (u + 1) * (v + 1) * (u + v - 1) / 3


def _psi1_gradient(u, v):
    u, v = _arr(u, v)
    return np.stack([(v + 1) * (2 * u + v) / 3, (u + 1) * (u + 2 * v) / 3])


def _psi1_hessian(u, v):
    u, v = _arr(u, v)
    return np.stack([2 * (v + 1) / 3, (2 * u + 2 * v + 1) / 3, 2 * (u + 1) / 3])


def _psi2_value(u, v):
    u, v = _arr(u, v)
    return -(1 - u * u) * (1 - v * v) / 4


def _psi2_gradient(u, v):
    u, v = _arr(u, v)
    return np.stack([u * (1 - v * v) / 2, v * (1 - u * u) / 2])


def _psi2_hessian(u, v):
    u, v = _arr(u, v)
    return np.stack([(1 - v * v) / 2, -u * v, (1 - u * u) / 2])


# second-order jets (f, f_u, f_v, f_uu, f_uv, f_vv) for the order-1 truncation
def _jmul(a, b):
    f, fu, fv, fuu, fuv, fvv = a
    g, gu, gv, guu, guv, gvv = b
    return (f * g, fu * g + f * gu, fv * g + f * gv,
            fuu * g + 2 * fu * gu + f * guu,
            fuv * g + fu * gv + fv * gu + f * guv,
            fvv * g + 2 * fv * gv + f * gvv)


def _jrecip(a):
    f, fu, fv, fuu, fuv, fvv = a
    i1, i2, i3 = 1 / f, -1 / f ** 2, 2 / f ** 3
    return (i1, i2 * fu, i2 * fv,
            i3 * fu * fu + i2 * fuu, i3 * fu * fv + i2 * fuv, i3 * fv * fv + i2 * fvv)


def _H3_jet(u, v):
    u, v = _arr(u, v)
    z = np.zeros_like(u + v)
    one = z + 1
    r = (u * u + u * v + v * v, 2 * u + v, u + 2 * v, 2 * one, one, 2 * one)
    a = (1 - u * u, -2 * u, z, -2 * one, z, z)
    b = (1 - v * v, z, -2 * v, z, z, -2 * one)
    w = u + v
    c = (1 - w * w, -2 * w, -2 * w, -2 * one, -2 * one, -2 * one)
    tau = _jmul(_jmul(a, b), c)
    denom = tuple(12 * x for x in (r[0] - 3,) + r[1:])
    corr = _jmul(tau, _jrecip(denom))
    base = ((r[0] + 1) / 6,) + tuple(x / 6 for x in r[1:])
    return tuple(p + q for p, q in zip(base, corr))


def _H3_value(u, v):
    return _H3_jet(u, v)[0]


def _H3_gradient(u, v):
    return np.stack(_H3_jet(u, v)[1:3])


def _H3_hessian(u, v):
    return np.stack(_H3_jet(u, v)[3:])


h1 = AnalyticField("h1", _h1_value, _h1_gradient, _h1_hessian)
h2 = AnalyticField("h2", _h2_value, _h2_gradient, _h2_hessian)
H1 = AnalyticField("H1", _H1_value, _H1_gradient, _H1_hessian, _H1_third)
H2 = AnalyticField("H2", _H2_value, _H2_gradient, _H2_hessian, _H2_third)
H3_TRUNCATED = AnalyticField("H3-truncated[tau^1]", _H3_value, _H3_gradient, _H3_hessian, order=1)
psi1_uv = AnalyticField("psi1(u,v)", _psi1_value, _psi1_gradient, _psi1_hessian)
psi2_uv = AnalyticField("psi2(u,v)", _psi2_value, _psi2_gradient, _psi2_hessian)

_H_FIELDS = {1: H1, 2: H2}
_h_FIELDS = {1: h1, 2: h2}
_PSI_FIELDS = {1: psi1_uv, 2: psi2_uv}


def _check_case(j):
    if j not in (1, 2):
        raise UnsupportedError(f"no closed form for j={j}")


def h_field(j) -> AnalyticField:
    _check_case(j)
    return _h_FIELDS[j]


def H_field(j) -> AnalyticField:
    if j == 3:
        return H3_TRUNCATED
    _check_case(j)
    return _H_FIELDS[j]


def psi_field(j) -> AnalyticField:
    """The dual potential as a function on the polygon (coordinates ``u, v``)."""
    _check_case(j)
    return _PSI_FIELDS[j]


def _check_closure(j, u, v):
    if not np.all(get_polytope(j).in_closure(u, v)):
        raise DomainError(f"point outside closed polygon square{j}")


def h_exact(j, x, y):
    return h_field(j).value(x, y)


def H_exact(j, u, v):
    _check_case(j)
    _check_closure(j, u, v)
    return H_field(j).value(u, v)


def psi_exact(j, u, v):
    _check_case(j)
    _check_closure(j, u, v)
    return psi_field(j).value(u, v)


def legendre_identity_check(j, u, v):
    """``u H_u + v H_v - H - psi``; vanishes identically."""
    H = H_field(j)
    Hu, Hv = H.gradient(u, v)
    return u * Hu + v * Hv - H.value(u, v) - psi_exact(j, u, v)


def H3_boundary(u, v, tol=1e-12):
    """Boundary values ``(r + 1) / 6`` with ``r = u^2 + uv + v^2``."""
    if not np.all(get_polytope(3).on_boundary(u, v, tol)):
        raise PreconditionError("H3_boundary needs points on the boundary of square3")
    u, v = _arr(u, v)
    return (u * u + u * v + v * v + 1) / 6


def H3_truncated(u, v):
    return H3_TRUNCATED.value(u, v)


def tau3(u, v):
    u, v = _arr(u, v)
    return (1 - u * u) * (1 - v * v) * (1 - (u + v) ** 2)


# -- residual operators -----------------------------------------------------

def _det(hess):
    return hess[0] * hess[2] - hess[1] ** 2


def residual_eq21(h, x, y):
    """``det Hess h - exp(-h)``."""
    return _det(h.hessian(x, y)) - np.exp(-h.value(x, y))


def residual_eq211(H, u, v):
    """``(H_vv - u^2/3)(H_uu - v^2/3) - (H_uv + uv/3)^2 - (H - u H_u - v H_v)``."""
    u, v = _arr(u, v)
    Huu, Huv, Hvv = H.hessian(u, v)
    Hu, Hv = H.gradient(u, v)
    lhs = (Hvv - u * u / 3) * (Huu - v * v / 3) - (Huv + u * v / 3) ** 2
    return lhs - (H.value(u, v) - u * Hu - v * Hv)


def bordered_determinant(value, grad, hess):
    """``det [[p_ss, p_st, p_s], [p_st, p_tt, p_t], [p_s, p_t, 3p]]``."""
    ps, pt = grad
    pss, pst, ptt = hess
    return (pss * (ptt * 3 * value - pt * pt)
            - pst * (pst * 3 * value - pt * ps)
            + ps * (pst * pt - ptt * ps))


def bordered_expansion(value, grad, hess):
    """Same determinant written as ``3p det Hess p - (p_s^2 p_tt - 2 p_s p_t p_st + p_t^2 p_ss)``."""
    ps, pt = grad
    pss, pst, ptt = hess
    return 3 * value * (pss * ptt - pst ** 2) - (ps * ps * ptt - 2 * ps * pt * pst + pt * pt * pss)


def residual_eq13(psi, s, t):
    """Bordered determinant of ``psi`` plus 3: zero for a solution of the dual equation."""
    return bordered_determinant(psi.value(s, t), psi.gradient(s, t), psi.hessian(s, t)) + 3


def residual_eq11(phi, k, s, t):
    """``(-phi)^(2+k) det Hess phi - 1``; requires ``phi < 0``."""
    val = np.asarray(phi.value(s, t), dtype=float)
    if np.any(val >= 0):
        raise SignError("residual_eq11 needs phi < 0")
    return (-val) ** (2 + k) * _det(phi.hessian(s, t)) - 1


def constant_field(c, label=None) -> AnalyticField:
    def value(x, y):
        return np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, float(c))

    def gradient(x, y):
        return np.zeros((2,) + np.broadcast(np.asarray(x), np.asarray(y)).shape)

    def hessian(x, y):
        return np.zeros((3,) + np.broadcast(np.asarray(x), np.asarray(y)).shape)

    return AnalyticField(label or f"const({c})", value, gradient, hessian)
