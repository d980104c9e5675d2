"""Closed-loop simulation under act-and-wait delayed feedback.

The delay is a whole number of periods and the step divides the period, so
the delayed state needed by each RK4 stage is the matching stage value stored
while integrating the step exactly ``d`` periods earlier. No interpolation
is involved; the scheme is RK4 applied to the stacked system of the current
and delayed segments.
"""
from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import DomainError, FeedbackLaw, LinearPeriodicSystem, NonlinearAutonomousSystem
from .odeint import DEFAULT_CONFIG, OVERFLOW_GUARD, DivergenceError, half_grid


class PreconditionError(ValueError):
    """Monodromy matrix does not satisfy the convergence hypotheses."""


@dataclass(frozen=True)
class Trajectory:
    """Grid samples of a closed-loop run.

    ``inputs[j]`` is the control used on the step leaving node ``j``;
    ``switch[j]`` is the switching value there.
    """

    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    switch: np.ndarray
    law: FeedbackLaw
    period: float
    steps_per_period: int

    @property
    def cycle_nodes(self):
        return self.steps_per_period * self.law.schedule.cycle

    def cycle_states(self):
        """States at ``t = k P T`` for ``k = 0, 1, ...``."""
        return self.states[::self.cycle_nodes]

    def period_states(self):
        """States at integer multiples of ``T``."""
        return self.states[::self.steps_per_period]


def _first_bad(xs):
    bad = ~np.all(np.abs(xs.reshape(len(xs), -1)) < OVERFLOW_GUARD, axis=1)
    return int(np.argmax(bad)) if bad.any() else -1


class _Recorder:
    def __init__(self, n_periods, N, shape, m):
        total = n_periods * N
        self.states = np.empty((total + 1,) + shape)
        self.inputs = np.zeros((total + 1, m))
        self.switch = np.zeros(total + 1, dtype=np.int8)

    def period(self, p, N, nodes, inputs):
        sl = slice(p * N, (p + 1) * N)
        self.states[sl] = nodes
        if inputs is not None:
            self.inputs[sl] = inputs
            self.switch[sl] = 1

    def partial(self, upto):
        return self.states[:upto], self.inputs[:upto], self.switch[:upto]


def _diverged(rec, p, N, h, nodes, inputs):
    """Raise with the first grid node of period ``p`` that leaves the guard."""
    j = _first_bad(nodes)
    if j < 0:
        j = N
    err = DivergenceError((p * N + j) * h)
    if rec is not None:
        rec.period(p, N, nodes, inputs)
        err.partial = rec.partial(p * N + j)
    raise err


def _run_nonlinear(f, F, x0, schedule, period, N, n_periods, rec):
    """RK4 loop for ``x' = f(x) + u``; delayed stage values come from ``history``."""
    h = period / N
    h2, h6 = h / 2, h / 6
    x = np.array(x0, dtype=float)
    history = deque(maxlen=schedule.delay)
    for p in range(n_periods):
        stages = np.empty((N, 4) + x.shape)
        x_start = x
        if schedule.active(p):
            yd = history[0]
            for j in range(N):
                d = yd[j]
                k1 = f(x) - F @ (x - d[0])
                y2 = x + h2 * k1
                k2 = f(y2) - F @ (y2 - d[1])
                y3 = x + h2 * k2
                k3 = f(y3) - F @ (y3 - d[2])
                y4 = x + h * k3
                k4 = f(y4) - F @ (y4 - d[3])
                s = stages[j]
                s[0], s[1], s[2], s[3] = x, y2, y3, y4
                x = x + h6 * (k1 + 2 * k2 + 2 * k3 + k4)
            inputs = -(stages[:, 0] - yd[:, 0]) @ F.T
        else:
            for j in range(N):
                k1 = f(x)
                y2 = x + h2 * k1
                k2 = f(y2)
                y3 = x + h2 * k2
                k3 = f(y3)
                y4 = x + h * k3
                k4 = f(y4)
                s = stages[j]
                s[0], s[1], s[2], s[3] = x, y2, y3, y4
                x = x + h6 * (k1 + 2 * k2 + 2 * k3 + k4)
            inputs = None
        if not np.all(np.abs(x) < OVERFLOW_GUARD) or _first_bad(stages[:, 0]) >= 0:
            _diverged(rec, p, N, h, stages[:, 0], inputs)
        if rec is not None:
            rec.period(p, N, stages[:, 0], inputs)
        history.append(stages)
    return x, history


def _stage_operators(K, h):
    """Homogeneous RK4 stage maps for ``x' = K(t) x`` at every step.

    Returns ``E2, E3, E4`` (stage states as functions of the node state) and
    the step map ``S``; arrays have shape ``(..., N, n, n)``.
    """
    n = K.shape[-1]
    eye = np.eye(n)
    K0, Kh, K1 = K[..., 0:-1:2, :, :], K[..., 1::2, :, :], K[..., 2::2, :, :]
    E2 = eye + h / 2 * K0
    E3 = eye + h / 2 * (Kh @ E2)
    E4 = eye + h * (Kh @ E3)
    S = eye + h / 6 * (K0 + 2 * Kh @ E2 + 2 * Kh @ E3 + K1 @ E4)
    return E2, E3, E4, S


class _LinearPlan:
    """Precomputed per-step operators of a linear closed loop over one period."""

    def __init__(self, sys, F, cfg):
        A, B = half_grid(sys, cfg)
        self.h = cfg.step(sys.period)
        self.F = F
        self.G = B @ F[..., None, :, :]            # B F on the half grid
        self.K_on = A - self.G
        self.off = _stage_operators(A, self.h)
        self.on = _stage_operators(self.K_on, self.h)


def _affine_recurrence(S, c, x):
    """``x_{j+1} = S_j x_j + c_j``; returns the nodes ``x_0 .. x_N``."""
    N = S.shape[-3]
    out = np.empty((N + 1,) + x.shape)
    out[0] = x
    for j in range(N):
        x = S[..., j, :, :] @ x + c[..., j, :, :]
        out[j + 1] = x
    return out


def _run_linear(plan, x0, schedule, N, n_periods, rec):
    """Linear closed loop, batched over gains and initial columns.

    The state has shape ``(..., n, k)``. Within a period every RK4 stage is
    affine in the node state and the delayed stage values, so the delayed
    contributions are formed for all steps at once and only the node
    recurrence runs sequentially.
    """
    h = plan.h
    x = np.array(x0, dtype=float)
    history = deque(maxlen=schedule.delay)
    # stage arrays are indexed (step, stage, ..., n, k); operators (..., step, n, n)
    mv = lambda M, v: np.moveaxis(M @ np.moveaxis(v, 0, -3), -3, 0)
    for p in range(n_periods):
        if schedule.active(p):
            E2, E3, E4, S = plan.on
            G, K = plan.G, plan.K_on
            K0, Kh, K1 = K[..., 0:-1:2, :, :], K[..., 1::2, :, :], K[..., 2::2, :, :]
            G0, Gh, G1 = G[..., 0:-1:2, :, :], G[..., 1::2, :, :], G[..., 2::2, :, :]
            d = history[0]
            k1 = mv(G0, d[:, 0])
            y2 = h / 2 * k1
            k2 = mv(Kh, y2) + mv(Gh, d[:, 1])
            y3 = h / 2 * k2
            k3 = mv(Kh, y3) + mv(Gh, d[:, 2])
            y4 = h * k3
            k4 = mv(K1, y4) + mv(G1, d[:, 3])
            c = h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            offsets = (y2, y3, y4)
        else:
            E2, E3, E4, S = plan.off
            c = np.zeros((N,) + x.shape)
            offsets = (0.0, 0.0, 0.0)
        nodes = _affine_recurrence(S, np.moveaxis(c, 0, -3), x)
        xs = nodes[:-1]
        stages = np.stack([xs, mv(E2, xs) + offsets[0], mv(E3, xs) + offsets[1],
                           mv(E4, xs) + offsets[2]], axis=1)
        x = nodes[-1]
        inputs = None
        if rec is not None and schedule.active(p):
            inputs = -((xs - history[0][:, 0])[..., 0] @ plan.F.T)
        if not np.all(np.abs(x) < OVERFLOW_GUARD) or _first_bad(xs) >= 0:
            _diverged(rec, p, N, h, xs[..., 0] if rec is not None else xs, inputs)
        if rec is not None:
            rec.period(p, N, xs[..., 0], inputs)
        history.append(stages)
    return x, history


def _finish(rec, x, history, schedule, n_periods, control_at_end):
    idx = len(rec.states) - 1
    rec.states[idx] = x
    if schedule.active(n_periods):
        rec.inputs[idx] = control_at_end(x, history[0][0, 0])
        rec.switch[idx] = 1
    return rec.states, rec.inputs, rec.switch


def _check_gain(system, gain):
    shape = (system.input_dim, system.dim)
    if np.shape(gain)[-2:] != shape:
        raise DomainError(f"gain shape {np.shape(gain)} incompatible with system {shape}")


def propagate_linear(sys, gain, schedule, x0, n_periods, cfg=DEFAULT_CONFIG):
    """Final state of the linear closed loop after ``n_periods`` periods.

    ``x0`` may be a vector ``(n,)`` or a block of columns ``(n, k)``.
    ``gain`` may be batched as ``(G, m, n)``; the result is then
    ``(G, n, k)``.
    """
    _check_gain(sys, gain)
    F = np.asarray(gain, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    vector = x0.ndim == 1
    X = x0[:, None] if vector else x0
    if F.ndim == 3:
        X = np.broadcast_to(X, (F.shape[0],) + X.shape[-2:]).copy()
    plan = _LinearPlan(sys, F, cfg)
    with np.errstate(over="ignore", invalid="ignore"):   # divergence is checked per period
        x, _ = _run_linear(plan, X, schedule, cfg.steps_per_period, n_periods, None)
    return x[..., 0] if vector else x


def simulate_closed_loop(system, law, x0, horizon_cycles, cfg=DEFAULT_CONFIG):
    """Simulate the closed loop under ``law`` for ``horizon_cycles`` full cycles.

    Parameters
    ----------
    system : LinearPeriodicSystem or NonlinearAutonomousSystem
    law : FeedbackLaw
    x0 : array_like
        State at ``t = 0``. No history is needed since every cycle starts
        with a wait span at least as long as the delay.
    horizon_cycles : int
    cfg : IntegratorConfig

    Returns
    -------
    Trajectory

    Raises
    ------
    DivergenceError
        If the state leaves the overflow guard. The arrays filled up to the
        first bad node are attached as ``err.partial``.
    """
    if horizon_cycles < 1:
        raise DomainError("horizon_cycles must be >= 1")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (system.dim,):
        raise DomainError(f"x0 must have shape ({system.dim},)")
    _check_gain(system, law.gain)
    F = law.gain
    schedule = law.schedule
    N = cfg.steps_per_period
    n_periods = horizon_cycles * schedule.cycle
    rec = _Recorder(n_periods, N, (system.dim,), system.input_dim)
    with np.errstate(over="ignore", invalid="ignore"):   # divergence is checked per period
        x, history = _run(system, F, x0, schedule, cfg, n_periods, rec)
    states, inputs, switch = _finish(rec, x, history, schedule, n_periods,
                                     lambda x, xd: -(F @ (x - xd)))
    times = system.period * np.arange(n_periods * N + 1) / N
    return Trajectory(times, states, inputs, switch, law, system.period, N)


def _run(system, F, x0, schedule, cfg, n_periods, rec):
    N = cfg.steps_per_period
    if isinstance(system, LinearPeriodicSystem):
        plan = _LinearPlan(system, F, cfg)
        x, history = _run_linear(plan, x0[:, None], schedule, N, n_periods, rec)
        x = x[:, 0]
        history = [s[..., 0] for s in history]
    elif isinstance(system, NonlinearAutonomousSystem):
        x, history = _run_nonlinear(system.f, F, x0, schedule, system.period, N, n_periods, rec)
    else:
        raise DomainError(f"unsupported system type {type(system).__name__}")
    return x, history


@dataclass(frozen=True)
class LimitPrediction:
    """Decomposition ``x0 = sum_i alpha_i v_i`` and its limit ``sum_{i<=kappa} alpha_i v_i``."""

    alphas: np.ndarray
    basis: np.ndarray
    eigenvalues: np.ndarray
    limit_point: np.ndarray
    kappa: int
    condition: float
    warning: Optional[str] = None

    def reconstruct(self):
        return self.basis @ self.alphas


def predict_limit(Lambda, x0, tol_unit=1e-6, tol_margin=1e-9, unit_vectors=None):
    """Predicted limit of ``x(kPT)`` for a convergent act-and-wait loop.

    Parameters
    ----------
    Lambda : (n, n) array_like
        Monodromy matrix over one cycle.
    x0 : (n,) array_like
    tol_unit, tol_margin : float
        Same meaning as in :func:`floquet_aaw.floquet.stability_verdict`.
    unit_vectors : (n, kappa) array_like, optional
        Basis to use for the unit eigenspace in place of the normalized
        eigenvectors, e.g. the periodic solution at ``t = 0``. Only changes
        the scaling of the reported ``alphas``.

    Raises
    ------
    PreconditionError
        If the verdict is not convergence to a periodic solution.
    """
    from .floquet import Verdict, stability_verdict

    report = stability_verdict(Lambda, tol_unit=tol_unit, tol_margin=tol_margin)
    if report.verdict is not Verdict.CONVERGES:
        raise PreconditionError(f"monodromy verdict is {report.verdict.value}")
    vals = report.eigenvalues
    vecs = report.eigenvectors
    unit = np.abs(vals - 1) <= tol_unit
    order = np.concatenate([np.flatnonzero(unit), np.flatnonzero(~unit)])
    vals, V = vals[order], vecs[:, order].copy()
    kappa = int(unit.sum())
    if unit_vectors is not None:
        U = np.asarray(unit_vectors, dtype=float).reshape(len(x0), -1)
        if U.shape[1] != kappa:
            raise DomainError(f"expected {kappa} unit vectors, got {U.shape[1]}")
        Lam = np.asarray(Lambda, dtype=float)
        resid = np.linalg.norm(Lam @ U - U) / max(np.linalg.norm(U), 1e-300)
        if resid > 1e-5:
            raise DomainError(f"unit_vectors are not fixed by Lambda (residual {resid:.2e})")
        V[:, :kappa] = U
    x0 = np.asarray(x0, dtype=float)
    cond = float(np.linalg.cond(V))
    alphas = np.linalg.solve(V, x0.astype(complex))
    limit = V[:, :kappa] @ alphas[:kappa]
    warning = None
    if cond > 1e10:
        warning = f"ill-conditioned eigenbasis (cond={cond:.2e})"
        warnings.warn(warning, RuntimeWarning, stacklevel=2)
    return LimitPrediction(alphas, V, vals, limit.real, kappa, cond, warning)


@dataclass(frozen=True)
class Diagnostics:
    distances: np.ndarray
    monotone_tail: bool

    @property
    def final(self):
        return float(self.distances[-1])


def convergence_diagnostics(traj, target):
    """Distance of ``x(kPT)`` to the target point, one entry per cycle.

    ``target`` is a :class:`LimitPrediction` or a state vector. The tail flag
    is set when each of the last five distances is at most 1.1 times its
    predecessor.
    """
    point = target.limit_point if isinstance(target, LimitPrediction) else np.asarray(target)
    xs = traj.cycle_states()
    if len(xs) < 4:
        raise DomainError("trajectory must span at least 3 cycles")
    dist = np.linalg.norm(xs - point, axis=1)
    tail = dist[-5:]
    monotone = bool(np.all(tail[1:] <= 1.1 * tail[:-1]))
    return Diagnostics(dist, monotone)
