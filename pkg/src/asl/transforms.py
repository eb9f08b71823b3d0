"""Legendre duality: gradient maps, the power transform, and recovery of h from H."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import quad_vec

from .closed_forms import AnalyticField, H_field, psi_field
from .domains import Polytope, get_polytope
from .errors import (ConvexityError, DomainError, NearBoundaryError, PathError,
                     SignError, SingularityError)

PSI_SCALE = (2.0 / 3.0) ** (2.0 / 3.0)


# -- gradient maps ------------------------------------------------------------

def moment_map(h: AnalyticField, x, y):
    """``(h_x, h_y)``."""
    return h.gradient(x, y)


def gradient_map_H(H: AnalyticField, u, v, polytope=None):
    """``(H_u, H_v)``; checks the closed polygon when one is given."""
    if polytope is not None and not np.all(get_polytope(polytope).in_closure(u, v)):
        raise DomainError("point outside closed polygon")
    return H.gradient(u, v)


def _solve2(hess, rhs):
    a, b, c = hess
    det = a * c - b * b
    return np.stack([(c * rhs[0] - b * rhs[1]) / det, (a * rhs[1] - b * rhs[0]) / det]), det


@dataclass(frozen=True)
class GradientMap:
    """Forward map ``p -> grad f(p)`` with a damped Newton inverse.

    ``region`` restricts Newton iterates to a closed polygon (``None``: the plane).
    """

    source: AnalyticField
    region: Optional[Polytope] = None
    max_iter: int = 50
    tol: float = 1e-12

    def forward(self, x, y):
        return self.source.gradient(x, y)

    def jacobian(self, x, y):
        return self.source.hessian(x, y)

    def _start(self, shape):
        c = self.region.centroid if self.region is not None else (0.0, 0.0)
        return np.full(shape, c[0]), np.full(shape, c[1])

    def inverse(self, s, t, start=None):
        s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
        target = np.stack([s, t])
        z = np.stack(self._start(s.shape) if start is None else np.broadcast_arrays(*start)).astype(float)
        res = self.forward(*z) - target
        err = np.abs(res).max(axis=0)
        for _ in range(self.max_iter):
            active = err > 0.1 * self.tol
            if not np.any(active):
                break
            step, det = _solve2(self.jacobian(*z), -res)
            step = np.where(np.isfinite(step), step, 0.0)
            lam = np.ones(s.shape)
            pending = active.copy()
            for _ in range(40):
                trial = z + lam * step
                ok = np.ones(s.shape, dtype=bool)
                if self.region is not None:
                    ok &= self.region.in_closure(trial[0], trial[1], tol=1e-13)
                r_trial = self.forward(*trial) - target
                e_trial = np.abs(r_trial).max(axis=0)
                ok &= e_trial < err
                accept = pending & ok
                z = np.where(accept, trial, z)
                res = np.where(accept, r_trial, res)
                err = np.where(accept, e_trial, err)
                pending &= ~ok
                if not np.any(pending):
                    break
                lam = np.where(pending, lam * 0.5, lam)
            if np.all(pending[active]):
                break
        if np.any(err > 1e3 * self.tol):
            raise SingularityError(f"gradient-map inverse did not converge (max residual {err.max():.2e})")
        return z[0], z[1]


# -- composites over the (s, t) domain ----------------------------------------

def dual_composite(H: AnalyticField, P: AnalyticField, polytope, label=None,
                   legendre=False) -> AnalyticField:
    """``P o (grad H)^{-1}`` as a field over the image domain, by the chain rule.

    Needs third derivatives of ``H``.  With ``legendre=True`` the caller asserts
    that ``P`` is the Legendre dual of ``H``; the value is then computed as
    ``u s + v t - H(u, v)``, which is stationary in ``(u, v)`` and so only
    picks up the inverse-map error at second order.
    """
    gmap = GradientMap(H, get_polytope(polytope))

    def jet(s, t):
        dtype = np.result_type(s, t, float)
        u, v = gmap.inverse(s, t)
        Huu, Huv, Hvv = H.hessian(u, v)
        det = Huu * Hvv - Huv ** 2
        # M = (Hess H)^{-1} = d(u, v)/d(s, t)
        M = np.array([[Hvv, -Huv], [-Huv, Huu]]) / det
        Pu, Pv = P.gradient(u, v)
        Puu, Puv, Pvv = P.hessian(u, v)
        gp = np.array([Pu, Pv])
        grad = np.einsum("ab...,a...->b...", M, gp)
        Hppp = H.third(u, v)
        T = np.empty((2, 2, 2) + np.shape(u))
        T[0, 0, 0] = Hppp[0]
        T[0, 0, 1] = T[0, 1, 0] = T[1, 0, 0] = Hppp[1]
        T[0, 1, 1] = T[1, 0, 1] = T[1, 1, 0] = Hppp[2]
        T[1, 1, 1] = Hppp[3]
        Pab = np.array([[Puu, Puv], [Puv, Pvv]])
        hess = np.einsum("ab...,ai...,bj...->ij...", Pab, M, M)
        # dM/ds_j = -M (dHess/ds_j) M,  dHess_ab/ds_j = T_abc M_cj
        dHess = np.einsum("abc...,cj...->abj...", T, M)
        dM = -np.einsum("ia...,abj...,bk...->ikj...", M, dHess, M)
        hess = hess + np.einsum("a...,aij...->ij...", gp, dM)
        if legendre:
            # evaluated in the input precision: the subtraction cancels to O(rho)
            u, v, s, t = (np.asarray(x, dtype=dtype) for x in (u, v, s, t))
            value = u * s + v * t - H.value(u, v)
        else:
            value = P.value(u, v)
        return value, grad, np.stack([hess[0, 0], hess[0, 1], hess[1, 1]])

    return AnalyticField(
        label or f"{P.label} o grad({H.label})^-1",
        lambda s, t: jet(s, t)[0],
        lambda s, t: jet(s, t)[1],
        lambda s, t: jet(s, t)[2],
        jet_fn=jet,
    )


def composite_psi(j) -> AnalyticField:
    """The closed-form dual potential as a function of ``(s, t)`` on ``Omega_j``."""
    return dual_composite(H_field(j), psi_field(j), j, label=f"psi{j}(s,t)", legendre=True)


def hessian_inverse_check(H: AnalyticField, psi: AnalyticField, u, v):
    """Max-norm of ``Hess(psi) Hess(H) - I`` with ``psi`` evaluated at ``grad H(u, v)``."""
    Huu, Huv, Hvv = H.hessian(u, v)
    if np.any(Huu * Hvv - Huv ** 2 == 0):
        raise SingularityError("Hess H is singular")
    s, t = H.gradient(u, v)
    pss, pst, ptt = psi.hessian(s, t)
    prod = np.array([[pss * Huu + pst * Huv - 1, pss * Huv + pst * Hvv],
                     [pst * Huu + ptt * Huv, pst * Huv + ptt * Hvv - 1]])
    return np.abs(prod).max(axis=(0, 1))


def determinant_relation(H: AnalyticField, u, v):
    """``det Hess H + psi - (u^2 H_uu + 2uv H_uv + v^2 H_vv) / 3`` with ``psi`` the Legendre dual."""
    u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    Huu, Huv, Hvv = H.hessian(u, v)
    Hu, Hv = H.gradient(u, v)
    psi = u * Hu + v * Hv - H.value(u, v)
    return Huu * Hvv - Huv ** 2 + psi - (u * u * Huu + 2 * u * v * Huv + v * v * Hvv) / 3


# -- the power transform between phi and psi ----------------------------------

def psi_from_phi(phi):
    phi = np.asarray(phi, dtype=float)
    if np.any(phi > 0):
        raise SignError("psi_from_phi needs phi <= 0")
    out = -PSI_SCALE * (-phi) ** 1.5
    return float(out) if out.ndim == 0 else out


def phi_from_psi(psi):
    psi = np.asarray(psi, dtype=float)
    if np.any(psi > 0):
        raise SignError("phi_from_psi needs psi <= 0")
    out = -((1.5 ** (2.0 / 3.0)) * (-psi)) ** (2.0 / 3.0)
    return float(out) if out.ndim == 0 else out


def _power_compose(field, kappa, p, label):
    # f = -kappa (-g)^p, with g < 0
    def jet(x, y):
        g = np.asarray(field.value(x, y), dtype=float)
        gx, gy = field.gradient(x, y)
        gxx, gxy, gyy = field.hessian(x, y)
        if np.any(g >= 0):
            raise SignError(f"{label}: source field must be negative")
        d1 = kappa * p * (-g) ** (p - 1)
        d2 = -kappa * p * (p - 1) * (-g) ** (p - 2)
        val = -kappa * (-g) ** p
        grad = np.stack([d1 * gx, d1 * gy])
        hess = np.stack([d2 * gx * gx + d1 * gxx, d2 * gx * gy + d1 * gxy, d2 * gy * gy + d1 * gyy])
        return val, grad, hess

    return AnalyticField(label, lambda x, y: jet(x, y)[0], lambda x, y: jet(x, y)[1],
                         lambda x, y: jet(x, y)[2], jet_fn=jet)


def psi_field_from_phi(phi: AnalyticField) -> AnalyticField:
    return _power_compose(phi, PSI_SCALE, 1.5, f"psi[{phi.label}]")


def phi_field_from_psi(psi: AnalyticField) -> AnalyticField:
    return _power_compose(psi, PSI_SCALE ** (-2.0 / 3.0), 2.0 / 3.0, f"phi[{psi.label}]")


# -- recovering the Kähler potential ------------------------------------------

def critical_point(H: AnalyticField, polytope=None):
    """Interior point where ``grad H`` vanishes."""
    gmap = GradientMap(H, get_polytope(polytope) if polytope is not None else None)
    u, v = gmap.inverse(0.0, 0.0)
    return float(u), float(v)


def recover_h_from_H(H: AnalyticField, target, base=None, base_xy=(0.0, 0.0),
                     polytope=None, rtol=1e-9, min_denominator=1e-12):
    """Integrate ``dx, dy`` along the segment ``base -> target``; return ``(x, y, h)``.

    ``base`` defaults to the critical point of ``H``, where ``(x, y) = base_xy``.
    """
    poly = get_polytope(polytope) if polytope is not None else None
    if base is None:
        base = critical_point(H, poly)
    base = np.asarray(base, dtype=float)
    target = np.asarray(target, dtype=float)
    delta = target - base

    def denominator(u, v):
        Hu, Hv = H.gradient(u, v)
        return H.value(u, v) - u * Hu - v * Hv

    lam = np.linspace(0.0, 1.0, 65)
    seg = base[:, None] + lam[None, :] * delta[:, None]
    if poly is not None and not np.all(poly.contains(seg[0], seg[1])):
        raise PathError("integration segment leaves the open polygon")
    if np.any(denominator(seg[0], seg[1]) < min_denominator):
        raise NearBoundaryError("H - uH_u - vH_v too small along the segment")

    def integrand(l):
        u, v = base + l * delta
        Huu, Huv, Hvv = H.hessian(u, v)
        D = denominator(u, v)
        if D < min_denominator:
            raise NearBoundaryError(f"denominator {D:.3e} at ({u:.6g}, {v:.6g})")
        cross = Huv + u * v / 3
        dx = (Huu - v * v / 3) * delta[0] + cross * delta[1]
        dy = (Hvv - u * u / 3) * delta[1] + cross * delta[0]
        return np.array([dx, dy]) / D

    if np.all(delta == 0):
        xy = np.zeros(2)
    else:
        xy, _ = quad_vec(integrand, 0.0, 1.0, epsrel=rtol, epsabs=1e-14, norm="max")
    D = float(denominator(*target))
    return float(base_xy[0] + xy[0]), float(base_xy[1] + xy[1]), float(-np.log(D))


# -- Legendre transform of sampled fields -----------------------------------------

@dataclass(frozen=True)
class SampledField:
    """Values on a logically rectangular (possibly curvilinear) grid.

    ``X``, ``Y`` hold node coordinates; ``mask`` flags nodes carrying data.
    """

    X: np.ndarray
    Y: np.ndarray
    values: np.ndarray
    mask: np.ndarray

    @classmethod
    def from_function(cls, f, xs, ys, inside=None):
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        mask = np.ones(X.shape, dtype=bool) if inside is None else np.asarray(inside(X, Y), dtype=bool)
        vals = np.where(mask, f(np.where(mask, X, 0.0), np.where(mask, Y, 0.0)), np.nan)
        return cls(X, Y, vals, mask)

    def points(self):
        return np.stack([self.X[self.mask], self.Y[self.mask], self.values[self.mask]], axis=-1)


def _index_derivative(F, mask, axis):
    """Second-order derivative along an index axis using only masked nodes; NaN where impossible."""
    F = np.moveaxis(np.where(mask, F, np.nan), axis, 0)
    n = F.shape[0]
    P = np.full((n + 4,) + F.shape[1:], np.nan)
    P[2:-2] = F
    c, m1, m2, p1, p2 = P[2:-2], P[1:-3], P[:-4], P[3:-1], P[4:]
    central = 0.5 * (p1 - m1)
    fwd = -1.5 * c + 2 * p1 - 0.5 * p2
    bwd = 1.5 * c - 2 * m1 + 0.5 * m2
    out = np.where(np.isfinite(central), central, np.where(np.isfinite(fwd), fwd, bwd))
    return np.moveaxis(out, 0, axis)


def _physical_gradient(f: SampledField, G=None):
    """Gradient of ``G`` (default: the values) w.r.t. the node coordinates."""
    G = f.values if G is None else G
    Xi, Xj = _index_derivative(f.X, f.mask, 0), _index_derivative(f.X, f.mask, 1)
    Yi, Yj = _index_derivative(f.Y, f.mask, 0), _index_derivative(f.Y, f.mask, 1)
    Gi, Gj = _index_derivative(G, f.mask, 0), _index_derivative(G, f.mask, 1)
    det = Xi * Yj - Xj * Yi
    with np.errstate(divide="ignore", invalid="ignore"):
        gx = (Gi * Yj - Gj * Yi) / det
        gy = (Xi * Gj - Xj * Gi) / det
    return gx, gy


def discrete_hessian(f: SampledField):
    """``(f_xx, f_xy, f_yy)`` at every node (NaN where a stencil is missing)."""
    gx, gy = _physical_gradient(f)
    xx, xy = _physical_gradient(f, gx)
    yx, yy = _physical_gradient(f, gy)
    return xx, 0.5 * (xy + yx), yy


def legendre_transform_grid(f: SampledField) -> SampledField:
    """Dual field ``x f_x + y f_y - f`` placed at the discrete gradient image of each node."""
    xx, xy, yy = discrete_hessian(f)
    ok = np.isfinite(xx) & np.isfinite(xy) & np.isfinite(yy)
    bad = f.mask & ok & ~((xx > 0) & (xx * yy - xy * xy > 0))
    if np.any(bad):
        nodes = [tuple(int(i) for i in ix) for ix in np.argwhere(bad)]
        raise ConvexityError(f"field is not strictly convex at {len(nodes)} node(s)", nodes)
    gx, gy = _physical_gradient(f)
    mask = f.mask & np.isfinite(gx) & np.isfinite(gy)
    dual = np.where(mask, f.X * gx + f.Y * gy - f.values, np.nan)
    return SampledField(np.where(mask, gx, np.nan), np.where(mask, gy, np.nan), dual, mask)
