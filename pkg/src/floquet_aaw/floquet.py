"""Closed-loop monodromy matrices and the Floquet stability verdict.

Two independent constructions are provided. :func:`monodromy_integral`
evaluates the closed-form expression for the base schedule (one period off,
one period on, delay ``T``)::

    Lambda = Y(T,0) P(T,0) + int_T^2T Y(2T,s) B(s) F P(s-T,0) ds

where ``P`` and ``Y`` are the transition matrices of ``A`` and ``A - BF``.
:func:`monodromy_propagate` simulates the closed loop from each basis vector
and works for every schedule.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .model import BASE_SCHEDULE, DomainError, FeedbackLaw
from .odeint import (DEFAULT_CONFIG, OVERFLOW_GUARD, DivergenceError, backward_products,
                     closed_loop_generator, forward_products, half_grid, step_propagators)
from .simulate import propagate_linear

TOL_UNIT = 1e-6
TOL_MARGIN = 1e-9
MAX_DIM = 64


class NumericalError(ArithmeticError):
    pass


class Verdict(str, enum.Enum):
    CONVERGES = "ConvergesToPeriodic"
    UNSTABLE = "Unstable"
    INCONCLUSIVE = "Inconclusive"


def monodromy_integral(sys, gain, cfg=DEFAULT_CONFIG):
    """Base-schedule monodromy matrix from the integral formula.

    ``Y(2T, s)`` is replaced by ``Y(T, s - T)`` and tabulated at every grid
    node by a backward product of one-step propagators; the integral uses
    composite Simpson on the same grid.

    Parameters
    ----------
    sys : LinearPeriodicSystem
    gain : (m, n) or (G, m, n) array_like
    cfg : IntegratorConfig

    Returns
    -------
    (n, n) or (G, n, n) ndarray
    """
    F = np.asarray(gain, dtype=float)
    if F.ndim == 1 and sys.input_dim == 1:
        F = F[None, :]
    if F.ndim < 2 or F.shape[-2:] != (sys.input_dim, sys.dim):
        raise DomainError(f"gain shape {F.shape} incompatible with ({sys.input_dim}, {sys.dim})")
    h = cfg.step(sys.period)
    N = cfg.steps_per_period
    _, B = half_grid(sys, cfg)
    S_open = step_propagators(closed_loop_generator(sys, None, cfg), h)
    S_closed = step_propagators(closed_loop_generator(sys, F, cfg), h)
    phi = forward_products(S_open)          # phi[j] = P(s_j, 0)
    ups = backward_products(S_closed)       # ups[..., j] = Y(T, s_j)
    integrand = ups @ (B[0::2] @ F[..., None, :, :]) @ phi
    integral = simpson(integrand, dx=h, axis=-3)
    Lam = ups[..., 0, :, :] @ phi[N] + integral
    if not np.all(np.abs(Lam) < OVERFLOW_GUARD):
        raise DivergenceError(2 * sys.period, "monodromy matrix overflow")
    return Lam


def monodromy_propagate(sys, law, cfg=DEFAULT_CONFIG):
    """Monodromy matrix over one cycle by direct closed-loop simulation.

    Column ``i`` is the state at ``t = P T`` starting from the ``i``-th unit
    vector. Columns are integrated independently.
    """
    if not isinstance(law, FeedbackLaw):
        raise DomainError("law must be a FeedbackLaw")
    n = sys.dim
    cols = [propagate_linear(sys, law.gain, law.schedule, e, law.schedule.cycle, cfg)
            for e in np.eye(n)]
    return np.column_stack(cols)


def monodromy(sys, law, cfg=DEFAULT_CONFIG):
    """Integral route for the base schedule, propagation otherwise."""
    if law.schedule == BASE_SCHEDULE:
        return monodromy_integral(sys, law.gain, cfg)
    return monodromy_propagate(sys, law, cfg)


def _normalize(v):
    v = v / np.linalg.norm(v)
    mags = np.abs(v)
    k = int(np.argmax(mags >= mags.max() * (1 - 1e-12)))
    return v * (np.conj(v[k]) / mags[k])


def eigendecompose(M):
    """Eigenpairs sorted by modulus, then real part, then imaginary part (descending).

    Eigenvectors have unit 2-norm and their largest-modulus entry is real
    and nonnegative.

    Returns
    -------
    values : (n,) complex ndarray
    vectors : (n, n) complex ndarray
        Column ``i`` pairs with ``values[i]``.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError("matrix must be square")
    if M.shape[0] > MAX_DIM:
        raise DomainError(f"dimension {M.shape[0]} exceeds {MAX_DIM}")
    if not np.all(np.isfinite(M)):
        raise NumericalError("matrix has non-finite entries")
    try:
        vals, vecs = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(str(exc)) from exc
    vals = vals.astype(complex)
    # rounded keys so conjugate pairs tie on modulus
    keys = (-np.round(vals.imag, 12), -np.round(vals.real, 12), -np.round(np.abs(vals), 12))
    order = np.lexsort(keys)
    vals = vals[order]
    vecs = np.column_stack([_normalize(vecs[:, i].astype(complex)) for i in order])
    return vals, vecs


def unit_eigen_analysis(Lambda, tol_unit=TOL_UNIT, values=None):
    """Multiplicity of the eigenvalue 1 and whether it is semisimple.

    Semisimplicity is decided by the numerical rank of ``Lambda - I`` at
    threshold ``tol_unit * ||Lambda||``: the nullity must equal the count.
    """
    if not tol_unit > 0:
        raise DomainError("tol_unit must be positive")
    L = np.asarray(Lambda, dtype=float)
    if values is None:
        values, _ = eigendecompose(L)
    kappa = int(np.sum(np.abs(values - 1) <= tol_unit))
    sv = np.linalg.svd(L - np.eye(len(L)), compute_uv=False)
    rank = int(np.sum(sv > tol_unit * np.linalg.norm(L, 2)))
    return kappa, len(L) - rank == kappa


@dataclass(frozen=True)
class MonodromyReport:
    Lambda: np.ndarray
    cycle_time: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    kappa: int
    unit_semisimple: bool
    spectral_radius_excl_unit: float
    verdict: Verdict
    tol_unit: float = TOL_UNIT
    tol_margin: float = TOL_MARGIN

    @property
    def stable(self):
        return self.verdict is Verdict.CONVERGES

    def unit_eigenvector(self):
        """Eigenvector of the eigenvalue closest to 1."""
        i = int(np.argmin(np.abs(self.eigenvalues - 1)))
        return self.eigenvectors[:, i]


def stability_verdict(Lambda, cycle_time=float("nan"), tol_unit=TOL_UNIT, tol_margin=TOL_MARGIN):
    """Eigen-analysis of a closed-loop monodromy matrix.

    The state at cycle boundaries converges to a periodic solution when 1 is
    a semisimple eigenvalue and every other eigenvalue lies strictly inside
    the unit circle (by more than ``tol_margin``). Spectra within the margin
    of the circle are inconclusive, as is a spectrum with no eigenvalue at 1
    that is otherwise inside the circle: the structural multiplier is then
    missing and the matrix is suspect.
    """
    L = np.asarray(Lambda, dtype=float)
    vals, vecs = eigendecompose(L)
    kappa, semisimple = unit_eigen_analysis(L, tol_unit, values=vals)
    rest = np.abs(vals[np.abs(vals - 1) > tol_unit])
    rho = float(rest.max()) if rest.size else 0.0
    if kappa >= 1:
        if rho > 1 + tol_margin or not semisimple:
            verdict = Verdict.UNSTABLE
        elif rho >= 1 - tol_margin:
            verdict = Verdict.INCONCLUSIVE
        else:
            verdict = Verdict.CONVERGES
    else:
        verdict = Verdict.UNSTABLE if rho > 1 + tol_margin else Verdict.INCONCLUSIVE
    return MonodromyReport(L, float(cycle_time), vals, vecs, kappa, bool(semisimple), rho,
                           verdict, tol_unit, tol_margin)


def analyze(sys, law, cfg=DEFAULT_CONFIG, tol_unit=TOL_UNIT, tol_margin=TOL_MARGIN):
    """Monodromy matrix of ``sys`` under ``law`` and its verdict."""
    Lam = monodromy(sys, law, cfg)
    return stability_verdict(Lam, law.schedule.cycle * sys.period, tol_unit, tol_margin)
