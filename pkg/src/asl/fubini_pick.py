"""Second-order boundary coefficient of the dual potential.

Near a boundary point ``psi = -rho - f rho^2 + O(rho^3)``, where ``rho`` is the
stitched defining function.  ``f`` is recovered by a cubic least-squares fit
of ``psi`` against ``rho`` along the inward normal.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .domains import get_domain
from .errors import CollarError, FitError, PreconditionError, ProbeError, SingularityError, UnsupportedError

log = logging.getLogger(__name__)

ON_BOUNDARY_TOL = 1e-8
MAX_CONDITION = 1e10
# probe depths: fractions of the diameter for analytic fields, grid cells for solved ones
ANALYTIC_DEPTHS = tuple(np.geomspace(1e-5, 1e-4, 7))
SOLVED_DEPTHS = (2.0, 3.0, 4.0, 5.0, 6.0)
# analytic windows shrink like (corner distance / CORNER_SCALE)^2 near corners
CORNER_SCALE = 0.5


@dataclass(frozen=True)
class ExpansionCoefficients:
    point: tuple
    piece: int
    a1: float
    f: float
    fit_residual: float
    depths: tuple
    a2: float = float("nan")
    a3: float = float("nan")
    condition: float = float("nan")
    error: Optional[str] = None

    @property
    def ok(self):
        return self.error is None

    def row(self):
        return (self.point[0], self.point[1], self.piece, self.a1, self.f, self.fit_residual)


def _corner_points(domain):
    return np.array([[float(x) for x in p] for p, _, _ in domain.exact_corners()])


def default_depths(field, domain, point=None):
    """Absolute probe depths suited to the kind of field.

    Grid fields are probed a few cells deep.  Analytic fields are probed much
    closer to the boundary, and closer still near a corner: there the
    higher-order terms of the expansion grow and the window over which a
    cubic is accurate shrinks roughly like the squared corner distance.
    """
    grid = getattr(field, "grid", None)
    if grid is not None:
        return tuple(d * grid.h for d in SOLVED_DEPTHS)
    scale = 1.0
    if point is not None:
        corners = _corner_points(domain)
        if len(corners):
            dc = np.hypot(*(corners - np.asarray(point, dtype=float)).T).min()
            scale = min(1.0, (dc / (CORNER_SCALE * domain.diameter)) ** 2)
    return tuple(d * scale * domain.diameter for d in ANALYTIC_DEPTHS)


def _inward_normal(domain, point, collar):
    try:
        val, grad, pieces = domain.stitched_rho(point[None], collar)
    except CollarError as exc:
        raise PreconditionError(f"({point[0]:.12g}, {point[1]:.12g}) is not on the boundary") from exc
    if abs(val[0]) > ON_BOUNDARY_TOL:
        raise PreconditionError(f"({point[0]:.12g}, {point[1]:.12g}) is not on the boundary "
                                f"(rho = {val[0]:.3e})")
    g = grad[0]
    return g / np.linalg.norm(g), int(pieces[0])


def _lstsq(A, y):
    """Least squares by twice-iterated Gram-Schmidt, in the precision of ``A``.

    numpy's LAPACK routines are float64 only; the fit needs more than that
    because ``psi + rho`` is a small difference of the probed values.
    """
    Q = np.array(A, copy=True)
    R = np.zeros((A.shape[1], A.shape[1]), dtype=A.dtype)
    for k in range(A.shape[1]):
        for _ in range(2):
            r = Q[:, :k].T @ Q[:, k]
            Q[:, k] -= Q[:, :k] @ r
            R[:k, k] += r
        R[k, k] = np.sqrt(Q[:, k] @ Q[:, k])
        Q[:, k] /= R[k, k]
    b = Q.T @ y
    c = np.zeros_like(b)
    for k in range(len(b) - 1, -1, -1):
        c[k] = (b[k] - R[k, k + 1:] @ c[k + 1:]) / R[k, k]
    return c


def _probe_rho(domain, probes, collar):
    """Stitched ``rho`` at the probes, in extended precision."""
    _, _, pieces = domain.stitched_rho(probes, collar)
    rho = np.empty(len(probes), dtype=np.longdouble)
    for i in np.unique(pieces):
        m = pieces == i
        rho[m] = domain.piece(int(i)).extended(probes[m, 0], probes[m, 1])
    return rho


def expand_along_normal(field, domain, boundary_point, depths=None, collar=None):
    """Fit ``psi ~ a1 rho + a2 rho^2 + a3 rho^3`` along the inward normal.

    Parameters
    ----------
    field
        Anything with a ``value(s, t)`` method: an analytic field or a grid field.
    domain
        Domain or domain key.
    boundary_point
        A point of the boundary (``|rho| <= 1e-8``) other than a corner.
    depths
        Strictly increasing probe distances; at least three, all inside the
        stitching collar.  Defaults to :func:`default_depths` at the point.

    Returns
    -------
    ExpansionCoefficients
        ``f = -a2``.
    """
    domain = get_domain(domain)
    collar = 0.1 * domain.diameter if collar is None else collar
    p = np.asarray(boundary_point, dtype=float)
    corners = _corner_points(domain)
    if len(corners) and np.hypot(*(corners - p).T).min() <= ON_BOUNDARY_TOL:
        raise PreconditionError(f"({p[0]:.12g}, {p[1]:.12g}) is a corner of {domain.name}; "
                                "the inward normal is undefined there")
    depths = np.asarray(default_depths(field, domain, p) if depths is None else depths, dtype=float)
    if depths.ndim != 1 or len(depths) < 3:
        raise PreconditionError("need at least three probe depths")
    if depths[0] <= 0 or np.any(np.diff(depths) <= 0):
        raise PreconditionError("probe depths must be positive and strictly increasing")
    if depths[-1] >= collar:
        raise PreconditionError(f"largest depth {depths[-1]:g} exceeds the collar {collar:g}")
    normal, piece = _inward_normal(domain, p, collar)
    probes = p[None] + depths[:, None] * normal[None]
    outside = ~domain.contains(probes[:, 0], probes[:, 1])
    if np.any(outside):
        raise ProbeError(f"{int(outside.sum())} probe(s) from ({p[0]:.12g}, {p[1]:.12g}) "
                         f"leave {domain.name}")
    # analytic fields are evaluated in extended precision when they support it;
    # grid fields come back in float64 and lose nothing by the promotion
    ext = probes.astype(np.longdouble)
    rho = _probe_rho(domain, probes, collar)
    psi = np.asarray(field.value(ext[:, 0], ext[:, 1]), dtype=np.longdouble)
    A = np.stack([rho, rho ** 2, rho ** 3], axis=1)
    scale = np.sqrt((A * A).sum(axis=0))
    cond = float(np.linalg.cond((A / scale).astype(float)))
    if not cond < MAX_CONDITION:
        raise FitError(f"probe fit is ill-conditioned (condition {cond:.3e})", cond)
    c = _lstsq(A / scale, psi) / scale
    resid = float(np.abs(A @ c - psi).max())
    return ExpansionCoefficients(
        point=(float(p[0]), float(p[1])), piece=piece, a1=float(c[0]), f=float(-c[1]),
        fit_residual=resid, depths=tuple(float(d) for d in depths),
        a2=float(c[1]), a3=float(c[2]), condition=cond)


# the edge on which each closed-form expansion is known, and its denominator
_CLOSED_FORM_EDGES = {
    1: (2, lambda s, t: -4 * s + 2 * t - 1),
    2: (2, lambda s, t: 6 * s - 2),
}


def fubini_pick_closed_form(j, point, tol=1e-10):
    """Exact ``f`` on the edges where the closed-form expansion is known.

    ``j = 1``: ``f = -1 / (-4s + 2t - 1)`` on ``{rho_2 = 0}``.
    ``j = 2``: ``f = -1 / (6s - 2)`` on ``{rho_2 = 0}``.
    """
    if j not in _CLOSED_FORM_EDGES:
        raise UnsupportedError(f"no closed-form boundary expansion for j = {j}")
    piece, denominator = _CLOSED_FORM_EDGES[j]
    domain = get_domain(j)
    s, t = (float(x) for x in point)
    rho = domain.rho(s, t)
    others = np.delete(rho, piece - 1)
    if abs(rho[piece - 1]) > tol or np.any(others < -tol):
        raise UnsupportedError(f"({s}, {t}) is not on the boundary arc of piece {piece} of {domain.name}")
    return -1.0 / denominator(s, t)


def profile_boundary(field, domain, count, depths=None, threads=1, collar=None):
    """Fit the expansion at ``count`` boundary points equally spaced in arclength.

    Failures at individual points are recorded in the ``error`` field of the
    returned coefficients instead of raising.  ``depths`` (absolute units)
    default per point to :func:`default_depths`.  Output does not depend on
    ``threads``.
    """
    domain = get_domain(domain)
    points, pieces, _ = domain.boundary_sample(count)
    # warm any lazily built lookup structures before fanning out
    field.value(*points[0])

    def one(k):
        try:
            return expand_along_normal(field, domain, points[k], depths, collar)
        except (ProbeError, FitError, PreconditionError, SingularityError) as exc:
            log.warning("boundary point %d: %s", k, exc)
            nan = float("nan")
            return ExpansionCoefficients((float(points[k, 0]), float(points[k, 1])), int(pieces[k]),
                                         nan, nan, nan, () if depths is None else tuple(depths),
                                         error=str(exc))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, range(count)))
    return [one(k) for k in range(count)]
