"""Linearization of an autonomous system about a known periodic solution.

The variational system has ``A(t) = df/dx (x*(t))`` and ``B(t) = I``; the
act-and-wait controller acts on the deviation ``x - x*`` additively.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import DomainError, LinearPeriodicSystem, NonlinearAutonomousSystem

CONSISTENCY_TOL = 1e-4


class ConsistencyError(ValueError):
    pass


class DegenerateOrbitError(ValueError):
    pass


def finite_difference_jacobian(f, x, rel_step=1e-6):
    """Central-difference Jacobian with step ``rel_step * (1 + ||x||)``."""
    x = np.asarray(x, dtype=float)
    h = rel_step * (1 + np.linalg.norm(x))
    J = np.empty((len(x), len(x)))
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        J[:, i] = (np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h)
    return J


@dataclass(frozen=True)
class VariationalSystem:
    base: LinearPeriodicSystem
    source: NonlinearAutonomousSystem
    xstar_dot0: np.ndarray

    @property
    def period(self):
        return self.base.period

    def A(self, t):
        return self.base.A(t)


def build_variational(nl, check_points=16):
    """Variational system of ``nl`` along its periodic solution.

    Uses the analytic Jacobian when available, after checking it against
    finite differences at ``check_points`` times on the orbit.

    Raises
    ------
    ConsistencyError
        Analytic and finite-difference Jacobians differ by more than 1e-4
        (relative to ``1 + ||J||``).
    """
    if not isinstance(nl, NonlinearAutonomousSystem):
        raise DomainError("expected a NonlinearAutonomousSystem")
    sol = nl.periodic_solution
    n = nl.dim
    if nl.jacobian is not None:
        for t in np.linspace(0.0, sol.period, check_points, endpoint=False):
            x = sol(t)
            Ja = np.asarray(nl.jacobian(x), dtype=float)
            Jf = finite_difference_jacobian(nl.f, x)
            err = np.max(np.abs(Ja - Jf)) / (1 + np.max(np.abs(Ja)))
            if err > CONSISTENCY_TOL:
                raise ConsistencyError(f"analytic Jacobian disagrees with finite differences "
                                       f"at t={t:.4g} (rel. error {err:.2e})")
        jac = nl.jacobian
    else:
        f = nl.f

        def jac(x):
            return finite_difference_jacobian(f, x)

    def A_of(t):
        return np.asarray(jac(sol(t)), dtype=float)

    eye = np.eye(n)

    def B_of(t):
        return eye

    base = LinearPeriodicSystem(n, n, sol.period, A_of, B_of, x_star=sol.velocity,
                                name=f"{nl.name}-variational")
    return VariationalSystem(base, nl, sol.velocity(0.0))


def verify_unit_eigenvector(vs, Lambda):
    """``||Lambda v - v|| / ||v||`` for ``v = x*'(0)``.

    Raises
    ------
    DegenerateOrbitError
        If ``x*'(0) = 0`` (an equilibrium rather than an orbit).
    """
    v = np.asarray(vs.xstar_dot0, dtype=float)
    nv = np.linalg.norm(v)
    if nv == 0:
        raise DegenerateOrbitError("x*'(0) vanishes: solution is an equilibrium")
    return float(np.linalg.norm(np.asarray(Lambda) @ v - v) / nv)


def homogeneous_residual(vs, t, dt=1e-5):
    """``||A(t) x*'(t) - d/dt x*'(t)||``, the derivative by central difference."""
    sol = vs.source.periodic_solution
    acc = (sol.velocity(t + dt) - sol.velocity(t - dt)) / (2 * dt)
    return float(np.linalg.norm(vs.A(t) @ sol.velocity(t) - acc))
