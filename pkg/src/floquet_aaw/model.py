"""Domain types: periodic systems, periodic solutions, switching schedules
and act-and-wait feedback laws.

Everything here is immutable data plus cheap evaluation hooks. Integration
lives in :mod:`floquet_aaw.odeint` and :mod:`floquet_aaw.simulate`.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

MatrixFn = Callable[[float], np.ndarray]
VectorFn = Callable[[float], np.ndarray]


class DomainError(ValueError):
    """Invalid argument or inconsistent model data."""


@dataclass(frozen=True)
class LinearPeriodicSystem:
    """``x' = A(t) x + B(t) u`` with ``A`` and ``B`` of period ``T``.

    Parameters
    ----------
    dim : int
        State dimension ``n``.
    input_dim : int
        Input dimension ``m``.
    period : float
        Period ``T > 0``.
    A_of, B_of : callable
        ``t -> (n, n)`` and ``t -> (n, m)`` arrays.
    x_star : callable, optional
        A known ``T``-periodic solution of the uncontrolled system.
    name : str
        Label used in reports.
    """

    dim: int
    input_dim: int
    period: float
    A_of: MatrixFn
    B_of: MatrixFn
    x_star: Optional[VectorFn] = None
    name: str = "linear"

    def __post_init__(self):
        if self.dim < 1 or self.input_dim < 1:
            raise DomainError("dimensions must be positive")
        if not self.period > 0:
            raise DomainError("period must be positive")

    def A(self, t):
        return np.asarray(self.A_of(t), dtype=float)

    def B(self, t):
        return np.asarray(self.B_of(t), dtype=float)

    def check_periodic(self, n_samples=32, tol=1e-12):
        """Largest deviation of ``A``/``B`` from periodicity on a sample grid.

        Raises
        ------
        DomainError
            If an entry is not finite or the deviation exceeds ``tol``.
        """
        T = self.period
        worst = 0.0
        for t in np.linspace(0.0, T, n_samples, endpoint=False):
            A0, A1 = self.A(t), self.A(t + T)
            B0, B1 = self.B(t), self.B(t + T)
            if A0.shape != (self.dim, self.dim) or B0.shape != (self.dim, self.input_dim):
                raise DomainError(f"bad matrix shape at t={t}")
            if not (np.all(np.isfinite(A0)) and np.all(np.isfinite(B0))):
                raise DomainError(f"non-finite system matrix at t={t}")
            worst = max(worst, np.max(np.abs(A1 - A0)), np.max(np.abs(B1 - B0)))
        if worst > tol:
            raise DomainError(f"system is not {T}-periodic (deviation {worst:.3e})")
        return worst


@dataclass(frozen=True)
class PeriodicSolution:
    """A ``T``-periodic solution ``x*(t)`` with its time derivative.

    If ``x_star_dot`` is omitted, a fourth-order central difference of
    ``x_star`` with step ``diff_step`` is used.
    """

    period: float
    x_star: VectorFn
    x_star_dot: Optional[VectorFn] = None
    diff_step: float = 1e-3

    def __call__(self, t):
        return np.asarray(self.x_star(t), dtype=float)

    def velocity(self, t):
        if self.x_star_dot is not None:
            return np.asarray(self.x_star_dot(t), dtype=float)
        h = self.diff_step
        x = self.x_star
        return (-np.asarray(x(t + 2 * h)) + 8 * np.asarray(x(t + h))
                - 8 * np.asarray(x(t - h)) + np.asarray(x(t - 2 * h))) / (12 * h)

    def periodicity_defect(self, n_samples=32):
        T = self.period
        ts = np.linspace(0.0, T, n_samples, endpoint=False)
        return max(float(np.max(np.abs(self(t + T) - self(t)))) for t in ts)


@dataclass(frozen=True)
class NonlinearAutonomousSystem:
    """``x' = f(x) + u`` with a known periodic solution of the free system."""

    dim: int
    f: Callable[[np.ndarray], np.ndarray]
    periodic_solution: PeriodicSolution
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "nonlinear"

    @property
    def period(self):
        return self.periodic_solution.period

    @property
    def input_dim(self):
        return self.dim

    def orbit_residual(self, n_samples=64):
        """max ``||x*'(t) - f(x*(t))||`` over one period."""
        sol = self.periodic_solution
        ts = np.linspace(0.0, sol.period, n_samples, endpoint=False)
        return max(float(np.linalg.norm(sol.velocity(t) - self.f(sol(t)))) for t in ts)


@dataclass(frozen=True)
class SwitchingSchedule:
    """Act-and-wait pattern in whole periods.

    Each cycle of ``wait + act`` periods starts with ``wait`` periods with the
    controller off, followed by ``act`` periods with it on. The feedback
    compares the state with its value ``delay`` periods earlier.
    """

    wait: int = 1
    act: int = 1
    delay: int = 1

    def __post_init__(self):
        for name in ("wait", "act", "delay"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")
        if self.delay > self.wait:
            raise DomainError("delay must not exceed the wait span")

    @property
    def cycle(self):
        return self.wait + self.act

    def active(self, period_index):
        """Controller state during period ``[jT, (j+1)T)``."""
        return period_index % self.cycle >= self.wait

    @property
    def duty(self):
        return self.act / self.cycle


BASE_SCHEDULE = SwitchingSchedule(1, 1, 1)


def switch_value(schedule, t, T):
    """Right-continuous switching signal of ``schedule`` at time ``t``."""
    if not T > 0:
        raise DomainError("period must be positive")
    if t < 0 or not math.isfinite(t):
        raise DomainError("time must be finite and nonnegative")
    r = t / T
    k = round(r)
    # t = jT computed in floating point may land a few ulps below j
    if abs(r - k) > 4 * sys.float_info.epsilon * max(1.0, r):
        k = math.floor(r)
    return 1 if schedule.active(int(k)) else 0


@dataclass(frozen=True)
class FeedbackLaw:
    """``u(t) = -s(t) F (x(t) - x(t - dT))`` for switching signal ``s``."""

    gain: np.ndarray
    schedule: SwitchingSchedule = field(default=BASE_SCHEDULE)

    def __post_init__(self):
        F = np.array(self.gain, dtype=float)
        if F.ndim == 1:
            F = F[None, :]
        if F.ndim != 2 or not np.all(np.isfinite(F)):
            raise DomainError("gain must be a finite 2-D array")
        F.setflags(write=False)
        object.__setattr__(self, "gain", F)

    def __hash__(self):
        return hash((self.gain.tobytes(), self.gain.shape, self.schedule))

    def __eq__(self, other):
        return (isinstance(other, FeedbackLaw) and self.schedule == other.schedule
                and np.array_equal(self.gain, other.gain))

    def input(self, t, x, x_delayed, T):
        if switch_value(self.schedule, t, T) == 0:
            return np.zeros(self.gain.shape[0])
        return -self.gain @ (np.asarray(x) - np.asarray(x_delayed))
