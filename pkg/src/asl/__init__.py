"""Dual Monge-Ampere potentials on the moment domains of toric del Pezzo surfaces.

Closed-form Kähler-Einstein potentials, their Legendre duals, a Newton solver
for the bordered Monge-Ampère equation on curved convex domains, boundary
expansion fits and the soliton constant.
"""

__version__ = "0.1.0"

from .closed_forms import H_field, h_field, psi_exact, psi_field  # noqa: E402
from .domains import get_domain, get_polytope  # noqa: E402
from .fubini_pick import expand_along_normal, fubini_pick_closed_form, profile_boundary  # noqa: E402
from .soliton import compatibility, solve_alpha  # noqa: E402
from .solver import SolverConfig, solve_phi, solve_psi  # noqa: E402
from .transforms import composite_psi  # noqa: E402

__all__ = [
    "H_field", "SolverConfig", "compatibility", "composite_psi", "expand_along_normal",
    "fubini_pick_closed_form", "get_domain", "get_polytope", "h_field", "profile_boundary",
    "psi_exact", "psi_field", "solve_alpha", "solve_phi", "solve_psi",
]
