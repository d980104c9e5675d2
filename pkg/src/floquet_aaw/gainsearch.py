"""Gain synthesis: grid scan of a box of gains, then Nelder-Mead polish.

The objective is the spectral radius of the closed-loop monodromy matrix
after discarding the structural eigenvalue at 1. A value below 1 means the
act-and-wait loop converges to a periodic solution.
"""
from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .floquet import (TOL_MARGIN, TOL_UNIT, Verdict, eigendecompose, monodromy_integral,
                      stability_verdict)
from .model import BASE_SCHEDULE, DomainError, FeedbackLaw
from .odeint import DEFAULT_CONFIG, DivergenceError
from .simulate import propagate_linear

MAX_GRID = 10 ** 7
CHUNK = 64
THREADS_ENV = "FLOQUET_AAW_THREADS"


def worker_count():
    """Worker threads from ``FLOQUET_AAW_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        k = int(raw)
    except ValueError:
        raise DomainError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if k < 0:
        raise DomainError(f"{THREADS_ENV} must be >= 0")
    return k or (os.cpu_count() or 1)


def _monodromies(sys, schedule, gains, cfg):
    """Monodromy matrices for a stack of gains ``(G, m, n)``."""
    if schedule == BASE_SCHEDULE:
        return monodromy_integral(sys, gains, cfg)
    eye = np.eye(sys.dim)
    return propagate_linear(sys, gains, schedule, eye, schedule.cycle, cfg)


def radius_excluding_unit(Lambda, tol_unit=TOL_UNIT):
    """Spectral radius after removing the one eigenvalue nearest 1.

    Returns ``(value, anomalous)``. When no eigenvalue lies within
    ``tol_unit`` of 1 nothing is removed and ``anomalous`` is True. Extra
    unit eigenvalues beyond the first also set ``anomalous``; they stay in
    the radius.
    """
    vals, _ = eigendecompose(Lambda)
    dist = np.abs(vals - 1)
    i = int(np.argmin(dist))
    if dist[i] <= tol_unit:
        rest = np.delete(vals, i)
        extra = bool(np.sum(dist <= tol_unit) > 1)
        return (float(np.abs(rest).max()) if rest.size else 0.0), extra
    return float(np.abs(vals).max()), True


def objective(sys, schedule, gain, cfg=DEFAULT_CONFIG, tol_unit=TOL_UNIT):
    """Spectral radius of ``Lambda(F)`` excluding the structural unit eigenvalue.

    Divergence of the monodromy computation yields ``inf``.
    """
    F = np.asarray(gain, dtype=float).reshape(sys.input_dim, sys.dim)
    try:
        Lam = _monodromies(sys, schedule, F[None], cfg)[0]
    except DivergenceError:
        return float("inf")
    if not np.all(np.isfinite(Lam)):
        return float("inf")
    return radius_excluding_unit(Lam, tol_unit)[0]


@dataclass(frozen=True)
class GainSearchSpec:
    """Box of gains to scan.

    ``lower`` and ``upper`` have the gain's shape ``(m, n)``. An entry with
    ``lower == upper`` is held fixed.
    """

    lower: np.ndarray
    upper: np.ndarray
    grid_points: int = 21
    refine: bool = True

    def __post_init__(self):
        lo = np.atleast_2d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_2d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape:
            raise DomainError("lower and upper bounds differ in shape")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise DomainError("bounds must be finite")
        if np.any(lo > hi):
            raise DomainError("each lower bound must not exceed its upper bound")
        if self.grid_points < 1:
            raise DomainError("grid_points must be positive")
        if self.grid_size > MAX_GRID:
            raise DomainError(f"grid of {self.grid_size} points exceeds {MAX_GRID}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def free(self):
        return (self.upper > self.lower).ravel()

    @property
    def grid_size(self):
        return int(self.grid_points ** int(np.sum(np.atleast_2d(self.upper) >
                                                   np.atleast_2d(self.lower))))

    def axes(self):
        return [np.linspace(lo, hi, self.grid_points) if hi > lo else np.array([lo])
                for lo, hi in zip(self.lower.ravel(), self.upper.ravel())]


@dataclass(frozen=True)
class GainSearchResult:
    best_F: np.ndarray
    best_objective: float
    verdict: Verdict
    evaluation_count: int
    stable: list = field(default_factory=list)
    grid_best_F: np.ndarray = None
    grid_best_objective: float = float("nan")
    anomalous: bool = False


def _evaluate_chunk(sys, schedule, gains, cfg, tol_unit, tol_margin):
    try:
        Lams = _monodromies(sys, schedule, gains, cfg)
    except DivergenceError:
        Lams = None
    out = []
    for i in range(len(gains)):
        if Lams is None or not np.all(np.isfinite(Lams[i])):
            if Lams is None:
                # one member diverged; evaluate the rest individually
                out.append((objective(sys, schedule, gains[i], cfg, tol_unit), False))
            else:
                out.append((float("inf"), False))
            continue
        value, anomalous = radius_excluding_unit(Lams[i], tol_unit)
        stable = (value < 1 and not anomalous and
                  stability_verdict(Lams[i], tol_unit=tol_unit,
                                    tol_margin=tol_margin).verdict is Verdict.CONVERGES)
        out.append((value, stable))
    return out


def search(sys, schedule, spec, cfg=DEFAULT_CONFIG, tol_unit=TOL_UNIT, tol_margin=TOL_MARGIN,
           workers=None):
    """Scan the gain box and polish the best point.

    Parameters
    ----------
    sys : LinearPeriodicSystem
    schedule : SwitchingSchedule
    spec : GainSearchSpec
    cfg : IntegratorConfig
    workers : int, optional
        Thread count; defaults to :func:`worker_count`. Results do not
        depend on it.

    Returns
    -------
    GainSearchResult
        Ties on the grid go to the lexicographically smallest gain. The
        simplex polish (reflection 1, expansion 2, contraction 0.5, shrink
        0.5, at most 200 iterations, stops when the simplex is within 1e-6)
        only replaces the grid optimum when it improves on it.
    """
    shape = (sys.input_dim, sys.dim)
    if spec.lower.shape != shape:
        raise DomainError(f"box shape {spec.lower.shape} != gain shape {shape}")
    gains = np.array(list(itertools.product(*spec.axes()))).reshape(-1, *shape)
    chunks = [gains[i:i + CHUNK] for i in range(0, len(gains), CHUNK)]
    workers = worker_count() if workers is None else max(1, int(workers))
    task = lambda g: _evaluate_chunk(sys, schedule, g, cfg, tol_unit, tol_margin)
    if workers == 1 or len(chunks) == 1:
        results = [task(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(task, chunks))
    flat = [r for chunk in results for r in chunk]
    values = np.array([v for v, _ in flat])
    stable = [(gains[i].copy(), float(values[i])) for i, (_, s) in enumerate(flat) if s]
    evaluations = len(gains)

    i_best = int(np.argmin(values))         # first minimum = lexicographically smallest
    grid_F = gains[i_best].copy()
    grid_value = objective(sys, schedule, grid_F, cfg, tol_unit)
    best_F, best_value = grid_F, grid_value

    free = spec.free
    if spec.refine and free.any() and np.isfinite(grid_value):
        lo, hi = spec.lower.ravel()[free], spec.upper.ravel()[free]
        base = grid_F.ravel().copy()

        def fun(z):
            F = base.copy()
            F[free] = z
            return objective(sys, schedule, F.reshape(shape), cfg, tol_unit)

        z0 = base[free]
        cell = (hi - lo) / max(spec.grid_points - 1, 1)
        simplex = [z0]
        for k in range(len(z0)):
            z = z0.copy()
            z[k] = z0[k] + cell[k] if z0[k] + cell[k] <= hi[k] else z0[k] - cell[k]
            simplex.append(z)
        res = minimize(fun, z0, method="Nelder-Mead", bounds=list(zip(lo, hi)),
                       options={"maxiter": 200, "xatol": 1e-6, "fatol": np.inf,
                                "initial_simplex": np.array(simplex), "adaptive": False})
        evaluations += int(res.nfev)
        cand = base.copy()
        cand[free] = np.clip(res.x, lo, hi)
        cand = cand.reshape(shape)
        cand_value = objective(sys, schedule, cand, cfg, tol_unit)
        evaluations += 1
        if cand_value < best_value:
            best_F, best_value = cand, cand_value

    if np.isfinite(best_value):
        Lam = _monodromies(sys, schedule, best_F[None], cfg)[0]
        report = stability_verdict(Lam, tol_unit=tol_unit, tol_margin=tol_margin)
        verdict = report.verdict
        anomalous = radius_excluding_unit(Lam, tol_unit)[1]
    else:
        verdict, anomalous = Verdict.UNSTABLE, False
    return GainSearchResult(best_F, float(best_value), verdict, evaluations, stable,
                            grid_F, float(grid_value), anomalous)


def law_from(result, schedule=BASE_SCHEDULE):
    return FeedbackLaw(result.best_F, schedule)
