"""Fixed-step classical Runge-Kutta integration on a period-aligned grid.

The step is ``h = T / N`` so every multiple of the period is a grid node.
Linear matrix ODEs ``M' = K(t) M`` are handled through one-step RK4
propagators, computed for all steps of a period in one vectorized pass.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import DomainError

OVERFLOW_GUARD = 1e12


class DivergenceError(ArithmeticError):
    """State became non-finite or exceeded the overflow guard."""

    def __init__(self, time, message=None):
        self.time = float(time)
        super().__init__(message or f"integration diverged at t={self.time:.6g}")


@dataclass(frozen=True)
class IntegratorConfig:
    steps_per_period: int = 4000
    method: str = "rk4"

    def __post_init__(self):
        if int(self.steps_per_period) != self.steps_per_period or self.steps_per_period < 2:
            raise DomainError("steps_per_period must be an integer >= 2")
        if self.steps_per_period % 2:
            raise DomainError("steps_per_period must be even (Simpson quadrature)")
        if self.method != "rk4":
            raise DomainError(f"unsupported method {self.method!r}")

    def step(self, period):
        return period / self.steps_per_period


DEFAULT_CONFIG = IntegratorConfig()


def _grid_steps(t0, t1, h):
    span = (t1 - t0) / h
    k = int(round(span))
    if span < -1e-9 or abs(span - k) > 1e-6 * max(1.0, abs(span)):
        raise DomainError(f"[{t0}, {t1}] is not a whole number of steps h={h}")
    return k


def rk4_step(rhs, t, x, h):
    k1 = rhs(t, x)
    k2 = rhs(t + h / 2, x + h / 2 * k1)
    k3 = rhs(t + h / 2, x + h / 2 * k2)
    k4 = rhs(t + h, x + h * k3)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_ode(rhs, x0, t0, t1, cfg=DEFAULT_CONFIG, period=1.0):
    """Integrate ``x' = rhs(t, x)`` from ``t0`` to ``t1`` with RK4.

    Parameters
    ----------
    rhs : callable
        ``(t, x) -> dx/dt``.
    x0 : array_like
        Initial state.
    t0, t1 : float
        Interval; ``t1 - t0`` must be a whole number of steps ``period / N``.
    cfg : IntegratorConfig
    period : float
        Sets the step ``h = period / cfg.steps_per_period``.

    Returns
    -------
    times : (K+1,) ndarray
    states : (K+1, ...) ndarray
        State at every grid node, including both ends.
    """
    h = cfg.step(period)
    nsteps = _grid_steps(t0, t1, h)
    x = np.array(x0, dtype=float)
    times = t0 + h * np.arange(nsteps + 1)
    states = np.empty((nsteps + 1,) + x.shape)
    states[0] = x
    for j in range(nsteps):
        x = rk4_step(rhs, times[j], x, h)
        if not np.all(np.abs(x) < OVERFLOW_GUARD):
            raise DivergenceError(times[j + 1])
        states[j + 1] = x
    return times, states


@lru_cache(maxsize=32)
def _half_grid(sys, N):
    h = sys.period / N
    ts = 0.5 * h * np.arange(2 * N + 1)
    A = np.array([sys.A(t) for t in ts])
    B = np.array([sys.B(t) for t in ts])
    A.setflags(write=False)
    B.setflags(write=False)
    return A, B


def half_grid(sys, cfg=DEFAULT_CONFIG):
    """``A`` and ``B`` sampled at every half step of one period.

    Returns arrays of shape ``(2N+1, n, n)`` and ``(2N+1, n, m)``; index ``k``
    corresponds to ``t = k h / 2``. Results are cached per system.
    """
    return _half_grid(sys, cfg.steps_per_period)


def closed_loop_generator(sys, gain, cfg=DEFAULT_CONFIG):
    """``A(t) - B(t) F`` on the half-step grid; ``gain=None`` gives ``A(t)``.

    ``gain`` may carry leading batch axes, ``(..., m, n)``; the result then
    has shape ``(..., 2N+1, n, n)``.
    """
    A, B = half_grid(sys, cfg)
    if gain is None:
        return np.array(A)
    F = np.asarray(gain, dtype=float)
    if F.shape[-2:] != (sys.input_dim, sys.dim):
        raise DomainError(f"gain shape {F.shape[-2:]} != ({sys.input_dim}, {sys.dim})")
    BF = B @ F[..., None, :, :]
    return A - BF


def step_propagators(K, h):
    """One-step RK4 propagators of ``M' = K(t) M`` for every step.

    Parameters
    ----------
    K : (..., 2N+1, n, n) ndarray
        Generator on the half-step grid.
    h : float
        Full step.

    Returns
    -------
    (..., N, n, n) ndarray
        ``S[j]`` maps the state at node ``j`` to node ``j+1``.
    """
    n = K.shape[-1]
    eye = np.eye(n)
    K0, Kh, K1 = K[..., 0:-1:2, :, :], K[..., 1::2, :, :], K[..., 2::2, :, :]
    k1 = K0
    k2 = Kh @ (eye + h / 2 * k1)
    k3 = Kh @ (eye + h / 2 * k2)
    k4 = K1 @ (eye + h * k3)
    return eye + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def forward_products(S):
    """``[I, S0, S1 S0, ...]``: transition matrices from node 0 to every node."""
    N, n = S.shape[-3], S.shape[-1]
    out = np.empty(S.shape[:-3] + (N + 1, n, n))
    M = np.broadcast_to(np.eye(n), S.shape[:-3] + (n, n)).copy()
    out[..., 0, :, :] = M
    for j in range(N):
        M = S[..., j, :, :] @ M
        out[..., j + 1, :, :] = M
    return out


def backward_products(S):
    """Transition matrices from every node to the last one.

    Accumulated as ``U[j] = U[j+1] S[j]``, never by inverting forward products.
    """
    N, n = S.shape[-3], S.shape[-1]
    out = np.empty(S.shape[:-3] + (N + 1, n, n))
    M = np.broadcast_to(np.eye(n), S.shape[:-3] + (n, n)).copy()
    out[..., N, :, :] = M
    for j in range(N - 1, -1, -1):
        M = M @ S[..., j, :, :]
        out[..., j, :, :] = M
    return out


@dataclass(frozen=True)
class TransitionMatrix:
    value: np.ndarray
    from_time: float
    to_time: float

    def __matmul__(self, other):
        if isinstance(other, TransitionMatrix):
            if not np.isclose(self.from_time, other.to_time):
                raise DomainError("transition matrices do not chain")
            return TransitionMatrix(self.value @ other.value, other.from_time, self.to_time)
        return self.value @ other


def transition_matrix(sys, gain=None, t0=0.0, t1=None, cfg=DEFAULT_CONFIG):
    """State-transition matrix of ``x' = (A(t) - B(t) F) x`` from ``t0`` to ``t1``.

    With ``gain=None`` this is the open-loop transition matrix. ``t0`` and
    ``t1`` must be grid nodes; ``t1`` defaults to ``t0 + T``.
    """
    T = sys.period
    N = cfg.steps_per_period
    h = cfg.step(T)
    if t1 is None:
        t1 = t0 + T
    j0 = _grid_steps(0.0, t0, h)
    nsteps = _grid_steps(t0, t1, h)
    S = step_propagators(closed_loop_generator(sys, gain, cfg), h)
    M = np.eye(sys.dim)
    for j in range(j0, j0 + nsteps):
        M = S[j % N] @ M
        if not np.all(np.abs(M) < OVERFLOW_GUARD):
            raise DivergenceError((j + 1) * h)
    return TransitionMatrix(M, float(t0), float(t1))
