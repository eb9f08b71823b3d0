"""Cartesian grids cut by a curved boundary, and fields sampled on them.

Every interior node gets eight legs (axis and diagonal directions).  A leg
ends either at a neighbouring interior node or at the exact point where the
grid line leaves the domain, in which case it is shortened (Shortley-Weller).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .domains import Domain, get_domain
from .errors import GeometryError

_INTERIOR_MARGIN = 1e-9

# direction name -> integer offset
DIRECTIONS = {
    "E": (1, 0), "W": (-1, 0), "N": (0, 1), "S": (0, -1),
    "NE": (1, 1), "SW": (-1, -1), "NW": (-1, 1), "SE": (1, -1),
}
# (forward, backward) leg pairs for each line through a node
LINES = {"s": ("E", "W"), "t": ("N", "S"), "d": ("NE", "SW"), "a": ("SE", "NW")}


@dataclass(frozen=True)
class Leg:
    length: np.ndarray      # (n,)
    neighbor: np.ndarray    # (n,) interior index, -1 where the leg ends on the boundary
    endpoint: np.ndarray    # (n, 2)
    piece: np.ndarray       # (n,) boundary piece hit, 0 for interior neighbours


@dataclass(frozen=True, eq=False)
class Grid:
    domain: Domain
    N: int
    h: float
    origin: tuple
    interior: np.ndarray    # (N+1, N+1) bool
    index: np.ndarray       # (N+1, N+1) int, -1 off the interior
    ij: np.ndarray          # (n, 2) integer node positions
    nodes: np.ndarray       # (n, 2) coordinates
    legs: dict

    @property
    def n(self):
        return len(self.nodes)

    def coords(self, i, j):
        return self.origin[0] + i * self.h, self.origin[1] + j * self.h

    @cached_property
    def boundary(self):
        """Unique boundary cut points ``(points, pieces)``, in a fixed order."""
        pts, pcs = [], []
        for name in DIRECTIONS:
            leg = self.legs[name]
            m = leg.neighbor < 0
            pts.append(leg.endpoint[m])
            pcs.append(leg.piece[m])
        pts, pcs = np.vstack(pts), np.concatenate(pcs)
        key = np.round(pts / self.h, 9)
        _, first = np.unique(key, axis=0, return_index=True)
        first = np.sort(first)
        return pts[first], pcs[first]

    @cached_property
    def boundary_distance(self):
        """Shortest leg to the boundary per node (``inf`` for nodes with no cut leg)."""
        d = np.full(self.n, np.inf)
        for leg in self.legs.values():
            d = np.where(leg.neighbor < 0, np.minimum(d, leg.length), d)
        return d

    @cached_property
    def operators(self):
        """Sparse difference operators ``s, t, ss, tt, st`` with zero Dirichlet data."""
        n = self.n
        rows = np.arange(n)

        def line(fwd, bwd):
            a, b = self.legs[fwd], self.legs[bwd]
            la, lb = a.length, b.length
            first = {
                "f": lb / (la * (la + lb)), "b": -la / (lb * (la + lb)), "c": (la - lb) / (la * lb)}
            second = {
                "f": 2 / (la * (la + lb)), "b": 2 / (lb * (la + lb)), "c": -2 / (la * lb)}
            mats = []
            for coef in (first, second):
                r = [rows]
                c = [rows]
                v = [coef["c"]]
                for leg, key in ((a, "f"), (b, "b")):
                    m = leg.neighbor >= 0
                    r.append(rows[m])
                    c.append(leg.neighbor[m])
                    v.append(coef[key][m])
                mats.append(sp.csr_matrix(
                    (np.concatenate(v), (np.concatenate(r), np.concatenate(c))), shape=(n, n)))
            return mats

        Ds, Dss = line(*LINES["s"])
        Dt, Dtt = line(*LINES["t"])
        _, Ddd = line(*LINES["d"])
        _, Daa = line(*LINES["a"])
        return {"s": Ds, "t": Dt, "ss": Dss, "tt": Dtt, "st": (0.5 * (Ddd - Daa)).tocsr()}

    def laplacian(self):
        ops = self.operators
        return (ops["ss"] + ops["tt"]).tocsc()

    def mirror_index(self):
        """Interior index of the node at ``-p`` for each node (``-1`` if absent)."""
        i, j = self.ij[:, 0], self.ij[:, 1]
        mi, mj = self.N - i, self.N - j
        return self.index[mi, mj]

    def to_array(self, values):
        out = np.full(self.interior.shape, np.nan)
        out[self.ij[:, 0], self.ij[:, 1]] = values
        return out


def discretize(domain, N) -> Grid:
    """Uniform grid with ``N`` intervals per side of the bounding box."""
    domain = get_domain(domain)
    if N < 16:
        raise ValueError("N must be >= 16")
    smin, smax, tmin, tmax = domain.bounding_box
    h = max(smax - smin, tmax - tmin) / N
    # centre the square grid on the box so symmetric domains get symmetric grids
    cs, ct = 0.5 * (smin + smax), 0.5 * (tmin + tmax)
    origin = (cs - 0.5 * N * h, ct - 0.5 * N * h)
    I, J = np.meshgrid(np.arange(N + 1), np.arange(N + 1), indexing="ij")
    S, T = origin[0] + I * h, origin[1] + J * h
    # nodes within rounding distance of the boundary count as boundary nodes
    interior = domain.min_rho(S, T) > _INTERIOR_MARGIN * h
    if not np.any(interior):
        raise GeometryError(f"{domain.name}: no interior nodes at N={N}")
    index = np.full(interior.shape, -1)
    ij = np.argwhere(interior)
    index[ij[:, 0], ij[:, 1]] = np.arange(len(ij))
    nodes = np.stack([S[interior], T[interior]], axis=-1)

    legs = {}
    for name, (di, dj) in DIRECTIONS.items():
        ni, nj = ij[:, 0] + di, ij[:, 1] + dj
        inside = (ni >= 0) & (ni <= N) & (nj >= 0) & (nj <= N)
        nb = np.full(len(ij), -1)
        nb[inside] = index[ni[inside], nj[inside]]
        full = h * np.hypot(di, dj)
        unit = np.array([di, dj], dtype=float) / np.hypot(di, dj)
        lam, piece = domain.exit_distance((nodes[:, 0], nodes[:, 1]), (unit[0], unit[1]))
        cut = nb < 0
        length = np.where(cut, np.minimum(lam, full), full)
        endpoint = nodes + length[:, None] * unit[None, :]
        legs[name] = Leg(length, nb, endpoint, np.where(cut, piece, 0))
    return Grid(domain, N, h, origin, interior, index, ij, nodes, legs)


# -- fields on grids ----------------------------------------------------------------

def _cubic_basis(dx, dy):
    return np.stack([np.ones_like(dx), dx, dy, dx * dx, dx * dy, dy * dy,
                     dx ** 3, dx * dx * dy, dx * dy * dy, dy ** 3], axis=-1)


@dataclass(frozen=True, eq=False)
class GridField:
    """Node values on a :class:`Grid`; boundary cut points carry the value 0.

    Off-node evaluation uses a weighted cubic least-squares fit over the
    ``neighbours`` nearest samples (interior nodes and boundary points).
    """

    grid: Grid
    values: np.ndarray
    label: str = "grid field"
    neighbours: int = 24

    @cached_property
    def _samples(self):
        bpts, _ = self.grid.boundary
        pts = np.vstack([self.grid.nodes, bpts])
        vals = np.concatenate([self.values, np.zeros(len(bpts))])
        return cKDTree(pts), pts, vals

    def node_derivatives(self):
        """``(grad, hess)`` at interior nodes from the solver's own stencils."""
        ops = self.grid.operators
        v = self.values
        return np.stack([ops["s"] @ v, ops["t"] @ v]), np.stack([ops["ss"] @ v, ops["st"] @ v, ops["tt"] @ v])

    def _fit(self, s, t):
        s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
        shape = s.shape
        q = np.stack([s.ravel(), t.ravel()], axis=-1)
        tree, pts, vals = self._samples
        dist, nbrs = tree.query(q, self.neighbours)
        out = np.empty((len(q), 6))
        for k, p in enumerate(q):
            idx = np.sort(nbrs[k])
            h = dist[k].max() / 2.0
            d = (pts[idx] - p) / h
            w = 1.0 / (1.0 + (d ** 2).sum(-1))
            A = _cubic_basis(d[:, 0], d[:, 1]) * w[:, None]
            c = np.linalg.lstsq(A, vals[idx] * w, rcond=None)[0]
            out[k] = [c[0], c[1] / h, c[2] / h, 2 * c[3] / h ** 2, c[4] / h ** 2, 2 * c[5] / h ** 2]
        return out.reshape(shape + (6,))

    def value(self, s, t):
        return self._fit(s, t)[..., 0]

    def gradient(self, s, t):
        return np.moveaxis(self._fit(s, t)[..., 1:3], -1, 0)

    def hessian(self, s, t):
        return np.moveaxis(self._fit(s, t)[..., 3:6], -1, 0)

    def jet(self, s, t):
        f = self._fit(s, t)
        return f[..., 0], np.moveaxis(f[..., 1:3], -1, 0), np.moveaxis(f[..., 3:6], -1, 0)

    def rows(self):
        """``(s, t, value)`` rows: interior nodes, then boundary points."""
        bpts, _ = self.grid.boundary
        inner = np.column_stack([self.grid.nodes, self.values])
        outer = np.column_stack([bpts, np.zeros(len(bpts))])
        return np.vstack([inner, outer])
