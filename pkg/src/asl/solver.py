"""Newton solver for the bordered Monge-Ampère problem on the cut-cell grid.

Unknown: ``psi`` at interior nodes, ``psi = 0`` on the boundary.  Residual
per node::

    det [[psi_ss, psi_st, psi_s], [psi_st, psi_tt, psi_t], [psi_s, psi_t, 3 psi]] + 3

The ``phi``-form ``(-phi)^(2+k) det Hess phi = 1`` is obtained from the
``psi`` solve by the power transform when ``k = 1/2``.  For other ``k`` the
solver works with ``w`` where ``phi = -(-w)^(3 / (4 + k))``; ``w`` vanishes
linearly at the boundary and the difference stencils stay accurate there.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree
from scipy.sparse.linalg import spsolve

from .closed_forms import bordered_determinant
from .domains import get_domain
from .errors import ConvexityError, SolverError
from .grid import GridField, discretize
from .transforms import phi_from_psi

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    N: int = 64
    tol: float = 1e-10
    max_iter: int = 50
    damping_floor: float = 2.0 ** -20
    initial_min: float = -0.3
    initial: str = "poisson"
    collar_cells: float = 5.0

    def __post_init__(self):
        if self.N < 16:
            raise ValueError("N must be >= 16")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class SolveReport:
    field: GridField
    residual_inf: float
    iterations: int
    trace: tuple
    min_value: float
    config: SolverConfig
    k: float = 0.5
    unknown: str = "psi"
    collar_residual_inf: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def domain(self):
        return self.field.grid.domain

    def to_json(self):
        out = {
            "domain": self.domain.name,
            "grid": self.config.N,
            "k": self.k,
            "unknown": self.unknown,
            "iterations": self.iterations,
            "residual_inf": self.residual_inf,
            "min_psi" if self.unknown == "psi" else "min_phi": self.min_value,
            "trace": list(self.trace),
            "config": asdict(self.config),
        }
        if self.collar_residual_inf is not None:
            out["collar_residual_inf"] = self.collar_residual_inf
        return out


def _derivatives(ops, v):
    return (ops["s"] @ v, ops["t"] @ v), (ops["ss"] @ v, ops["st"] @ v, ops["tt"] @ v)


def bordered_residual(ops, v):
    grad, hess = _derivatives(ops, v)
    return bordered_determinant(v, grad, hess) + 3


def bordered_jacobian(ops, v):
    """Jacobian of :func:`bordered_residual`, from the cofactors of the bordered matrix."""
    (ps, pt), (pss, pst, ptt) = _derivatives(ops, v)
    c_ss = 3 * v * ptt - pt * pt
    c_tt = 3 * v * pss - ps * ps
    c_st = 2 * (ps * pt - 3 * v * pst)
    c_s = 2 * (pt * pst - ps * ptt)
    c_t = 2 * (ps * pst - pt * pss)
    c_0 = 3 * (pss * ptt - pst * pst)
    D = sp.diags
    J = (D(c_ss) @ ops["ss"] + D(c_tt) @ ops["tt"] + D(c_st) @ ops["st"]
         + D(c_s) @ ops["s"] + D(c_t) @ ops["t"] + D(c_0))
    return J.tocsc()


def convexity_defects(ops, v):
    """Indices of nodes whose discrete Hessian is not positive definite."""
    _, (pss, pst, ptt) = _derivatives(ops, v)
    return np.flatnonzero(~((pss > 0) & (ptt > 0) & (pss * ptt - pst * pst > 0)))


def initial_guess(grid, target_min=-0.3):
    """Scaled solution of ``Laplace w = 1`` with zero boundary values."""
    w = spsolve(grid.laplacian(), np.ones(grid.n))
    return w * (target_min / w.min())


def newton(residual, jacobian, v, config, admissible=None):
    """Damped Newton with residual-monotone step halving.

    Returns ``(v, trace)``; raises :class:`SolverError` with the trace on failure.
    """
    F = residual(v)
    trace = [float(np.abs(F).max())]
    if not np.isfinite(trace[0]):
        raise SolverError("initial guess is not admissible", trace)
    for it in range(config.max_iter):
        if trace[-1] < config.tol:
            return v, trace
        step = spsolve(jacobian(v), -F)
        if not np.all(np.isfinite(step)):
            raise SolverError("singular Newton system", trace)
        lam = 1.0
        while True:
            trial = v + lam * step
            ok = admissible is None or admissible(trial)
            if ok:
                F_trial = residual(trial)
                if np.abs(F_trial).max() < trace[-1]:
                    break
            lam *= 0.5
            if lam < config.damping_floor:
                raise SolverError(f"damping exhausted at iteration {it + 1}", trace)
        v, F = trial, F_trial
        trace.append(float(np.abs(F).max()))
        log.debug("newton %d: |F| = %.3e (lambda = %g)", it + 1, trace[-1], lam)
    if trace[-1] < config.tol:
        return v, trace
    raise SolverError(f"no convergence in {config.max_iter} iterations", trace)


def solve_psi(domain, config: SolverConfig = SolverConfig()) -> SolveReport:
    domain = get_domain(domain)
    grid = discretize(domain, config.N)
    ops = grid.operators
    v0 = initial_guess(grid, config.initial_min)
    v, trace = newton(lambda v: bordered_residual(ops, v), lambda v: bordered_jacobian(ops, v),
                      v0, config, admissible=lambda v: np.all(v < 0))
    bad = convexity_defects(ops, v)
    if len(bad):
        raise ConvexityError(f"discrete Hessian not positive definite at {len(bad)} node(s)",
                             [tuple(grid.ij[k]) for k in bad])
    f = GridField(grid, v, label=f"psi[{domain.name}, N={config.N}]")
    return SolveReport(f, trace[-1], len(trace) - 1, tuple(trace), float(v.min()), config)


def boundary_exponent(k):
    """Exponent ``beta = 3 / (4 + k)`` with ``phi ~ -dist^beta`` near the boundary."""
    return 3.0 / (4.0 + k)


def _power_form(ops, k):
    """Residual and Jacobian for ``w`` with ``phi = -(-w)^beta``.

    With ``beta = 3 / (4 + k)`` the equation for ``phi`` becomes::

        -w det Hess w + (1 - beta) (w_s^2 w_tt - 2 w_s w_t w_st + w_t^2 w_ss) = 1 / beta^2

    whose solution vanishes linearly at the boundary, like ``psi``.
    """
    beta = boundary_exponent(k)
    c = 1.0 - beta

    def residual(v):
        (ws, wt), (wss, wst, wtt) = _derivatives(ops, v)
        quad = ws * ws * wtt - 2 * ws * wt * wst + wt * wt * wss
        return -v * (wss * wtt - wst * wst) + c * quad - 1.0 / beta ** 2

    def jacobian(v):
        (ws, wt), (wss, wst, wtt) = _derivatives(ops, v)
        D = sp.diags
        J = (D(-v * wtt + c * wt * wt) @ ops["ss"] + D(-v * wss + c * ws * ws) @ ops["tt"]
             + D(2 * v * wst - 2 * c * ws * wt) @ ops["st"]
             + D(2 * c * (ws * wtt - wt * wst)) @ ops["s"] + D(2 * c * (wt * wss - ws * wst)) @ ops["t"]
             + D(-(wss * wtt - wst * wst)))
        return J.tocsc()

    return residual, jacobian


def phi_residual(field: GridField, k):
    """``(-phi)^(2+k) det Hess phi - 1`` at every interior node (solver stencils)."""
    _, (pss, pst, ptt) = field.node_derivatives()
    return (-field.values) ** (2 + k) * (pss * ptt - pst * pst) - 1


def solve_phi(domain, k=0.5, config: SolverConfig = SolverConfig()) -> SolveReport:
    """Solve ``(-phi)^(2+k) det Hess phi = 1``, ``phi = 0`` on the boundary."""
    if not k > 0:
        raise ValueError("k must be positive")
    domain = get_domain(domain)
    if k == 0.5:
        rep = solve_psi(domain, config)
        grid = rep.field.grid
        f = GridField(grid, phi_from_psi(rep.field.values), label=f"phi[{domain.name}, N={config.N}]")
        trace, iterations = rep.trace, rep.iterations
        residual_inf = rep.residual_inf
    else:
        grid = discretize(domain, config.N)
        ops = grid.operators
        residual, jacobian = _power_form(ops, k)
        w0 = initial_guess(grid, config.initial_min)
        w, trace = newton(residual, jacobian, w0, config, admissible=lambda v: np.all(v < 0))
        bad = convexity_defects(ops, w)
        if len(bad):
            raise ConvexityError(f"discrete Hessian not positive definite at {len(bad)} node(s)",
                                 [tuple(grid.ij[i]) for i in bad])
        v = -(-w) ** boundary_exponent(k)
        f = GridField(grid, v, label=f"phi[{domain.name}, N={config.N}, k={k}]")
        iterations, residual_inf = len(trace) - 1, trace[-1]
    far = _far_from_boundary(grid, config.collar_cells)
    res = phi_residual(f, k)
    collar = float(np.abs(res[far]).max()) if np.any(far) else float("nan")
    return SolveReport(f, residual_inf, iterations, tuple(trace), float(f.values.min()), config,
                       k=k, unknown="phi", collar_residual_inf=collar)


def _far_from_boundary(grid, cells):
    pts, _ = grid.boundary
    if len(pts) == 0:
        return np.ones(grid.n, dtype=bool)
    d, _ = cKDTree(pts).query(grid.nodes)
    return d > cells * grid.h


def residual_report(field: GridField, domain=None):
    """Max / RMS / argmax of the discrete bordered residual of a grid field."""
    grid = field.grid
    if domain is not None and get_domain(domain) is not grid.domain:
        raise ValueError("field grid does not belong to this domain")
    r = bordered_residual(grid.operators, field.values)
    k = int(np.argmax(np.abs(r)))
    return {
        "residual_inf": float(np.abs(r).max()),
        "residual_l2": float(np.sqrt(np.mean(r * r))),
        "argmax": [float(x) for x in grid.nodes[k]],
        "residuals": r,
    }
