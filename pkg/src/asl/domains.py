"""Piecewise-quadratic convex domains, their moment polygons, and boundary queries.

Each domain is the intersection of the super-level sets ``{rho_i > 0}`` of a
few concave quadratics.  Coefficients are kept as exact rationals; floating
point evaluation happens on demand.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from .errors import CollarError, DegenerateBoundaryError, GeometryError

F = Fraction

# dense polar resolution used for tracing, stitching and bounding boxes
_DENSE = 8192


@dataclass(frozen=True)
class QuadraticPiece:
    """``q(s, t) = a s^2 + b st + c t^2 + d s + e t + g`` with rational coefficients."""

    domain: int
    index: int
    a: Fraction
    b: Fraction
    c: Fraction
    d: Fraction
    e: Fraction
    g: Fraction

    @property
    def coefficients(self):
        return (self.a, self.b, self.c, self.d, self.e, self.g)

    @cached_property
    def _float(self):
        return tuple(float(x) for x in self.coefficients)

    def exact(self, s, t) -> Fraction:
        """Evaluate at a rational point without rounding."""
        s, t = F(s), F(t)
        a, b, c, d, e, g = self.coefficients
        return a * s * s + b * s * t + c * t * t + d * s + e * t + g

    def __call__(self, s, t):
        a, b, c, d, e, g = self._float
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        return a * s * s + b * s * t + c * t * t + d * s + e * t + g

    def extended(self, s, t):
        """Evaluate in ``np.longdouble`` from the rational coefficients."""
        a, b, c, d, e, g = (np.longdouble(x.numerator) / np.longdouble(x.denominator)
                            for x in self.coefficients)
        s = np.asarray(s, dtype=np.longdouble)
        t = np.asarray(t, dtype=np.longdouble)
        return a * s * s + b * s * t + c * t * t + d * s + e * t + g

    def gradient(self, s, t):
        a, b, c, d, e, _ = self._float
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        return np.stack([2 * a * s + b * t + d, b * s + 2 * c * t + e])

    def hessian(self):
        """Constant Hessian as a 2x2 array."""
        a, b, c = self._float[:3]
        return np.array([[2 * a, b], [b, 2 * c]])

    def quadratic_part_eigenvalues(self):
        return np.linalg.eigvalsh(self.hessian() / 2)

    def along_line(self, p, direction):
        """Coefficients ``(A, B, C)`` of ``lam -> q(p + lam * direction)``."""
        a, b, c, d, e, g = self._float
        ps, pt = np.asarray(p[0], dtype=float), np.asarray(p[1], dtype=float)
        ds, dt = np.asarray(direction[0], dtype=float), np.asarray(direction[1], dtype=float)
        A = a * ds * ds + b * ds * dt + c * dt * dt
        B = 2 * a * ps * ds + b * (ps * dt + pt * ds) + 2 * c * pt * dt + d * ds + e * dt
        C = a * ps * ps + b * ps * pt + c * pt * pt + d * ps + e * pt + g
        return A, B, C

    def negated(self) -> "QuadraticPiece":
        """The piece ``(s, t) -> q(-s, -t)``."""
        return QuadraticPiece(self.domain, self.index, self.a, self.b, self.c, -self.d, -self.e, self.g)

    def swapped(self) -> "QuadraticPiece":
        """The piece ``(s, t) -> q(t, s)``."""
        return QuadraticPiece(self.domain, self.index, self.c, self.b, self.a, self.e, self.d, self.g)


def _shifted_piece(j, i, ls, lt, const, alpha, beta, gamma):
    # ls*s + lt*t + const - 3/2 (alpha*s + beta*t + gamma)^2
    alpha, beta, gamma = F(alpha), F(beta), F(gamma)
    h = F(3, 2)
    return QuadraticPiece(
        j, i,
        a=-h * alpha * alpha,
        b=-3 * alpha * beta,
        c=-h * beta * beta,
        d=F(ls) - 3 * alpha * gamma,
        e=F(lt) - 3 * beta * gamma,
        g=F(const) - h * gamma * gamma,
    )


def _positive_exit(A, B, C):
    """Smallest positive root of ``A lam^2 + B lam + C`` given ``C >= 0``, ``A <= 0``."""
    disc = np.maximum(B * B - 4 * A * C, 0.0)
    denom = -B + np.sqrt(disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = np.where(denom > 0, 2 * C / np.where(denom > 0, denom, 1.0), np.inf)
    return lam


@dataclass(frozen=True, eq=False)
class Domain:
    """Intersection of ``{rho_i > 0}`` over the pieces; convex and bounded."""

    index: int
    name: str
    pieces: tuple
    anchor: tuple = (0.0, 0.0)

    @property
    def n_pieces(self):
        return len(self.pieces)

    def piece(self, i) -> QuadraticPiece:
        if not 1 <= i <= len(self.pieces):
            raise IndexError(f"{self.name} has no piece {i}")
        return self.pieces[i - 1]

    def rho(self, s, t):
        """All defining functions stacked along the last axis."""
        return np.stack([p(s, t) for p in self.pieces], axis=-1)

    def min_rho(self, s, t):
        return self.rho(s, t).min(axis=-1)

    def contains(self, s, t):
        out = self.min_rho(s, t) > 0
        return bool(out) if np.ndim(out) == 0 else out

    def exit_distance(self, p, direction):
        """Distance along ``direction`` from interior ``p`` to the boundary.

        Returns ``(lam, piece)`` with ``piece`` 1-based; ties go to the lower index.
        """
        lams = []
        for pc in self.pieces:
            A, B, C = pc.along_line(p, direction)
            lams.append(_positive_exit(A, B, np.maximum(C, 0.0)))
        lams = np.stack(lams, axis=-1)
        k = np.argmin(lams, axis=-1)
        lam = np.take_along_axis(lams, k[..., None], axis=-1)[..., 0]
        return lam, k + 1

    # -- boundary tracing -------------------------------------------------

    def ray_point(self, theta):
        theta = np.asarray(theta, dtype=float)
        dirs = (np.cos(theta), np.sin(theta))
        c = (np.full_like(theta, self.anchor[0]), np.full_like(theta, self.anchor[1]))
        lam, piece = self.exit_distance(c, dirs)
        pts = np.stack([c[0] + lam * dirs[0], c[1] + lam * dirs[1]], axis=-1)
        # rounding can leave a traced point a few ulps inside; step out so that
        # boundary points are never reported as contained
        for _ in range(64):
            inside = self.min_rho(pts[..., 0], pts[..., 1]) > 0
            if not np.any(inside):
                break
            lam = np.where(inside, np.nextafter(lam, np.inf), lam)
            pts = np.stack([c[0] + lam * dirs[0], c[1] + lam * dirs[1]], axis=-1)
        return pts, piece

    @cached_property
    def _dense(self):
        theta = np.linspace(0.0, 2 * np.pi, _DENSE, endpoint=False)
        pts, piece = self.ray_point(theta)
        if not np.all(np.isfinite(pts)):
            raise GeometryError(f"{self.name}: unbounded ray from anchor")
        return theta, pts, piece

    @cached_property
    def _trees(self):
        _, pts, piece = self._dense
        return [cKDTree(pts[piece == i + 1]) for i in range(self.n_pieces)]

    @cached_property
    def diameter(self):
        pts = self._dense[1][::16]
        d = pts[:, None, :] - pts[None, :, :]
        return float(np.sqrt((d ** 2).sum(-1)).max())

    @cached_property
    def area(self):
        theta, pts, _ = self._dense
        r2 = ((pts - np.asarray(self.anchor)) ** 2).sum(-1)
        return float(0.5 * r2.mean() * 2 * np.pi)

    @cached_property
    def bounding_box(self):
        """``(smin, smax, tmin, tmax)``, computed from exact extremal candidates."""
        cands = [np.array([float(x) for x in p]) for p, _, _ in self.exact_corners()]
        for pc in self.pieces:
            a, b, c, d, e, g = pc._float
            # points of {q = 0} where the normal is axis-aligned
            for gs, gt, g0 in ((b, 2 * c, e), (2 * a, b, d)):
                if gs == 0 and gt == 0:
                    continue
                p0 = np.array([-g0 * gs, -g0 * gt]) / (gs * gs + gt * gt)
                dirn = np.array([-gt, gs])
                A, B, C = (float(x) for x in pc.along_line(p0, dirn))
                if A == 0:
                    roots = [-C / B] if B != 0 else []
                else:
                    disc = B * B - 4 * A * C
                    roots = [] if disc < 0 else [(-B + sgn * np.sqrt(disc)) / (2 * A) for sgn in (1, -1)]
                cands += [p0 + r * dirn for r in roots]
        cands = np.array(cands)
        on = self.min_rho(cands[:, 0], cands[:, 1]) >= -1e-12
        cands = cands[on]
        smin, smax = float(cands[:, 0].min()), float(cands[:, 0].max())
        tmin, tmax = float(cands[:, 1].min()), float(cands[:, 1].max())
        if self.is_centrally_symmetric():
            ms, mt = max(-smin, smax), max(-tmin, tmax)
            smin, smax, tmin, tmax = -ms, ms, -mt, mt
        return (smin, smax, tmin, tmax)

    def exact_corners(self):
        """Junctions as exact rationals, from matching gradients of adjacent pieces.

        Returns ``(point, piece_a, piece_b)`` with ``point`` a pair of Fractions.
        Adjacent pieces are tangent at a junction, so the point is where their
        (affine) gradients agree.
        """
        out = []
        for _, a, b in self.corners():
            pa, pb = self.piece(a), self.piece(b)
            m11, m12, m22 = 2 * (pa.a - pb.a), pa.b - pb.b, 2 * (pa.c - pb.c)
            r1, r2 = -(pa.d - pb.d), -(pa.e - pb.e)
            det = m11 * m22 - m12 * m12
            if det == 0:
                raise GeometryError(f"{self.name}: pieces {a}, {b} have parallel gradient fields")
            s = (r1 * m22 - m12 * r2) / det
            t = (m11 * r2 - m12 * r1) / det
            out.append(((s, t), a, b))
        return out

    def is_centrally_symmetric(self):
        own = {p.coefficients for p in self.pieces}
        return own == {p.negated().coefficients for p in self.pieces}

    def is_swap_symmetric(self):
        own = {p.coefficients for p in self.pieces}
        return own == {p.swapped().coefficients for p in self.pieces}

    def boundary_sample(self, count):
        """Points on the boundary equally spaced in arclength, counterclockwise.

        Returns ``(points, pieces, normals)``: an ``(n, 2)`` array, the 1-based
        active piece per point, and unit outward normals.
        """
        if count < self.n_pieces:
            raise ValueError(f"count must be >= {self.n_pieces}")
        theta, pts, _ = self._dense
        closed = np.vstack([pts, pts[:1]])
        seg = np.sqrt((np.diff(closed, axis=0) ** 2).sum(-1))
        arc = np.concatenate([[0.0], np.cumsum(seg)])
        target = np.arange(count) * arc[-1] / count
        th = np.interp(target, arc, np.concatenate([theta, [2 * np.pi]]))
        points, pieces = self.ray_point(th)
        return points, pieces, self.outward_normal(points, pieces)

    def outward_normal(self, points, pieces):
        points = np.atleast_2d(points)
        g = np.empty_like(points)
        for i in range(1, self.n_pieces + 1):
            m = pieces == i
            if np.any(m):
                g[m] = self.piece(i).gradient(points[m, 0], points[m, 1]).T
        norm = np.linalg.norm(g, axis=1, keepdims=True)
        if np.any(norm == 0):
            raise DegenerateBoundaryError(f"{self.name}: vanishing gradient on boundary")
        return -g / norm

    def corners(self):
        """Junction points where consecutive boundary pieces meet.

        Returns a list of ``(point, piece_before, piece_after)`` in ccw order.
        """
        theta, _, piece = self._dense
        out = []
        n = len(theta)
        for k in range(n):
            k2 = (k + 1) % n
            if piece[k] == piece[k2]:
                continue
            lo, hi = theta[k], theta[k] + 2 * np.pi / n
            a, b = piece[k], piece[k2]
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if self.ray_point(np.array([mid]))[1][0] == a:
                    lo = mid
                else:
                    hi = mid
            pt = self.ray_point(np.array([0.5 * (lo + hi)]))[0][0]
            out.append((pt, int(a), int(b)))
        return out

    # -- stitched defining function --------------------------------------

    def nearest_piece(self, points, collar=None):
        """Active piece for each point: the one whose boundary arc is nearest."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        collar = 0.1 * self.diameter if collar is None else collar
        dist = np.stack([tree.query(points)[0] for tree in self._trees], axis=-1)
        far = dist.min(axis=-1) > collar
        if np.any(far):
            raise CollarError(f"{self.name}: {int(far.sum())} point(s) outside collar of width {collar:g}")
        return np.argmin(dist, axis=-1) + 1

    def stitched_rho(self, points, collar=None):
        """Value and gradient of the stitched defining function near the boundary."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        pieces = self.nearest_piece(points, collar)
        val = np.empty(len(points))
        grad = np.empty_like(points)
        for i in range(1, self.n_pieces + 1):
            m = pieces == i
            if np.any(m):
                pc = self.piece(i)
                val[m] = pc(points[m, 0], points[m, 1])
                grad[m] = pc.gradient(points[m, 0], points[m, 1]).T
        return val, grad, pieces

    def boundary_curvature(self, points, pieces=None):
        """Curvature of the active level set ``{rho_i = 0}`` at boundary points."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if pieces is None:
            pieces = self.nearest_piece(points)
        kappa = np.empty(len(points))
        for i in range(1, self.n_pieces + 1):
            m = pieces == i
            if not np.any(m):
                continue
            pc = self.piece(i)
            gs, gt = pc.gradient(points[m, 0], points[m, 1])
            (hss, hst), (_, htt) = pc.hessian()
            norm = np.hypot(gs, gt)
            if np.any(norm == 0):
                raise DegenerateBoundaryError(f"{self.name}: zero gradient on piece {i}")
            kappa[m] = -(hss * gt ** 2 - 2 * hst * gs * gt + htt * gs ** 2) / norm ** 3
        return kappa


@dataclass(frozen=True)
class HalfPlane:
    """``a u + b v <= c``; ``piece`` names the boundary piece its edge maps to."""

    a: int
    b: int
    c: int
    piece: int | None = None

    def slack(self, u, v):
        return self.c - (self.a * np.asarray(u, dtype=float) + self.b * np.asarray(v, dtype=float))


@dataclass(frozen=True)
class Polytope:
    index: int
    name: str
    vertices: tuple
    halfplanes: tuple

    def contains(self, u, v):
        out = np.all([hp.slack(u, v) > 0 for hp in self.halfplanes], axis=0)
        return bool(out) if np.ndim(out) == 0 else out

    def in_closure(self, u, v, tol=1e-12):
        out = np.all([hp.slack(u, v) >= -tol for hp in self.halfplanes], axis=0)
        return bool(out) if np.ndim(out) == 0 else out

    def on_boundary(self, u, v, tol=1e-12):
        slack = np.min([hp.slack(u, v) for hp in self.halfplanes], axis=0)
        out = np.abs(slack) <= tol
        return bool(out) if np.ndim(out) == 0 else out

    @property
    def centroid(self):
        vs = np.array([[float(a), float(b)] for a, b in self.vertices])
        return tuple(vs.mean(axis=0))

    def edges(self):
        """``(halfplane, start, end)`` for each edge, following vertex order."""
        vs = self.vertices
        out = []
        for k in range(len(vs)):
            p, q = vs[k], vs[(k + 1) % len(vs)]
            for hp in self.halfplanes:
                if hp.a * p[0] + hp.b * p[1] == hp.c and hp.a * q[0] + hp.b * q[1] == hp.c:
                    out.append((hp, p, q))
        return out

    def edge_points(self, piece, count, include_ends=False):
        """``count`` points along the edge whose image is boundary piece ``piece``."""
        for hp, p, q in self.edges():
            if hp.piece == piece:
                lam = np.linspace(0, 1, count + 2)
                lam = lam if include_ends else lam[1:-1]
                p = np.array([float(x) for x in p])
                q = np.array([float(x) for x in q])
                return p[None, :] + lam[:, None] * (q - p)[None, :]
        raise KeyError(f"{self.name}: no edge for piece {piece}")


def _build_domains():
    h = F(1, 6)
    omega1 = (
        _shifted_piece(1, 1, F(-1, 2), F(-1, 2), F(5, 8), 1, -1, 0),
        _shifted_piece(1, 2, 1, 0, F(2, 3), 0, 1, h),
        _shifted_piece(1, 3, 0, 1, F(2, 3), 1, 0, h),
    )
    omega2 = (
        _shifted_piece(2, 1, 0, -1, F(1, 2), 1, 0, 0),
        _shifted_piece(2, 2, -1, 0, F(1, 2), 0, 1, 0),
        _shifted_piece(2, 3, 0, 1, F(1, 2), 1, 0, 0),
        _shifted_piece(2, 4, 1, 0, F(1, 2), 0, 1, 0),
    )
    omega3 = (
        _shifted_piece(3, 1, 0, -1, F(1, 3), 1, -1, h),
        _shifted_piece(3, 2, -1, 0, F(1, 3), 0, 1, -h),
        _shifted_piece(3, 3, 0, 1, F(1, 3), 1, 0, h),
        _shifted_piece(3, 4, 0, 1, F(1, 3), -1, 1, h),
        _shifted_piece(3, 5, 1, 0, F(1, 3), 0, 1, h),
        _shifted_piece(3, 6, 0, -1, F(1, 3), 1, 0, -h),
    )
    return {
        1: Domain(1, "omega1", omega1),
        2: Domain(2, "omega2", omega2),
        3: Domain(3, "omega3", omega3),
    }


def _build_polytopes():
    HP = HalfPlane
    return {
        1: Polytope(1, "square1", ((-1, -1), (2, -1), (-1, 2)),
                    (HP(1, 1, 1, 1), HP(-1, 0, 1, 2), HP(0, -1, 1, 3))),
        2: Polytope(2, "square2", ((-1, -1), (1, -1), (1, 1), (-1, 1)),
                    (HP(0, 1, 1, 1), HP(1, 0, 1, 2), HP(0, -1, 1, 3), HP(-1, 0, 1, 4))),
        3: Polytope(3, "square3", ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)),
                    (HP(1, 1, 1, 1), HP(1, 0, 1, 2), HP(0, -1, 1, 3),
                     HP(-1, -1, 1, 4), HP(-1, 0, 1, 5), HP(0, 1, 1, 6))),
    }


DOMAINS = _build_domains()
POLYTOPES = _build_polytopes()

# unit disk, used only for solver self-tests
DISK = Domain(0, "disk", (QuadraticPiece(0, 1, F(-1), F(0), F(-1), F(0), F(0), F(1)),))


def get_domain(key) -> Domain:
    """Look up a domain by index (1-3) or CLI token ``omega1|omega2|omega3``."""
    if isinstance(key, Domain):
        return key
    if isinstance(key, str):
        if key == "disk":
            return DISK
        if not key.startswith("omega"):
            raise KeyError(key)
        key = int(key[len("omega"):])
    if key not in DOMAINS:
        raise IndexError(f"no domain {key}")
    return DOMAINS[key]


def get_polytope(key) -> Polytope:
    if isinstance(key, Polytope):
        return key
    if isinstance(key, str):
        if not key.startswith("square"):
            raise KeyError(key)
        key = int(key[len("square"):])
    if key not in POLYTOPES:
        raise IndexError(f"no polytope {key}")
    return POLYTOPES[key]


def eval_piece(domain_id, piece_id, point):
    """``rho_{piece_id, domain_id}`` at ``point``; exact for rational input."""
    pc = get_domain(domain_id).piece(piece_id)
    s, t = point
    if all(isinstance(x, (int, Fraction)) for x in (s, t)):
        return pc.exact(s, t)
    return float(pc(s, t))


def contains(domain_id, point):
    return get_domain(domain_id).contains(*point)


def polytope_contains(domain_id, point):
    return get_polytope(domain_id).contains(*point)
