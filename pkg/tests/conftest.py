from functools import lru_cache

import numpy as np
import pytest

from asl.closed_forms import AnalyticField
from asl.solver import SolverConfig, solve_psi


def convex_negative_field(rng):
    """Random ``-c + q(s, t) + g exp(a s + b t)`` with ``q`` positive definite.

    Negative with positive definite Hessian on the disk of radius 1/2.
    """
    L = np.tril(rng.uniform(-0.5, 0.5, (2, 2))) + np.diag(rng.uniform(0.6, 1.4, 2))
    Q = L @ L.T
    A, B, C = Q[0, 0], Q[0, 1], Q[1, 1]
    a, b = rng.uniform(-1, 1, 2)
    g = rng.uniform(0.05, 0.3)
    c0 = 1.0 + g * np.exp(abs(a) + abs(b)) + rng.uniform(0.1, 1.0)

    def value(s, t):
        return -c0 + 0.5 * (A * s * s + 2 * B * s * t + C * t * t) + g * np.exp(a * s + b * t)

    def gradient(s, t):
        e = g * np.exp(a * s + b * t)
        return np.stack([A * s + B * t + a * e, B * s + C * t + b * e])

    def hessian(s, t):
        e = g * np.exp(a * s + b * t)
        return np.stack([A + a * a * e + 0 * s, B + a * b * e + 0 * s, C + b * b * e + 0 * s])

    return AnalyticField("random convex", value, gradient, hessian)


def disk_points(rng, n, radius=0.5):
    r = radius * np.sqrt(rng.uniform(0, 1, n))
    th = rng.uniform(0, 2 * np.pi, n)
    return r * np.cos(th), r * np.sin(th)


@lru_cache(maxsize=None)
def solved(j, N):
    """Cached psi solve; the solver is deterministic so sharing is safe."""
    return solve_psi(j, SolverConfig(N=N))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
