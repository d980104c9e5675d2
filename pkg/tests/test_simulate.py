import warnings

import numpy as np
import pytest

from floquet_aaw import IntegratorConfig
from floquet_aaw.examples import (EX41, EX42, GAIN_41, GAIN_42, SCHEDULE_GBAR, SCHEDULE_GHAT)
from floquet_aaw.floquet import eigendecompose, monodromy_integral, monodromy_propagate
from floquet_aaw.model import DomainError, FeedbackLaw, SwitchingSchedule
from floquet_aaw.odeint import DivergenceError
from floquet_aaw.simulate import (PreconditionError, convergence_diagnostics, predict_limit,
                                  propagate_linear, simulate_closed_loop)

from oracles import method_of_steps

LAW41 = FeedbackLaw(GAIN_41)
X0_41 = np.array([-1.9, 0.9])


@pytest.fixture(scope="module")
def lam41():
    return monodromy_integral(EX41, GAIN_41)


def test_on_orbit_input_vanishes(coarse):
    traj = simulate_closed_loop(EX41, LAW41, EX41.x_star(0.0), 5, coarse)
    assert np.max(np.abs(traj.inputs)) <= 1e-9
    drift = max(np.linalg.norm(x - EX41.x_star(t)) for t, x in zip(traj.times, traj.states))
    assert drift <= 1e-6


def test_trajectory_layout(coarse):
    traj = simulate_closed_loop(EX41, FeedbackLaw(GAIN_41, SCHEDULE_GHAT), X0_41, 2, coarse)
    N = coarse.steps_per_period
    assert traj.states.shape == (6 * N + 1, 2)
    assert traj.inputs.shape == (6 * N + 1, 1)
    assert traj.times[-1] == pytest.approx(6.0)
    assert traj.cycle_states().shape == (3, 2)
    assert traj.period_states().shape == (7, 2)
    # switch pattern: wait 1 period, act 2
    assert np.all(traj.switch[:N] == 0) and np.all(traj.switch[N:3 * N] == 1)
    assert np.all(traj.inputs[traj.switch == 0] == 0)
    assert np.any(traj.inputs[traj.switch == 1] != 0)


def test_superposition(coarse, rng):
    law = FeedbackLaw(GAIN_41, SCHEDULE_GBAR)
    x, y = rng.normal(size=2), rng.normal(size=2)
    a, b = 0.7, -1.3
    sx = simulate_closed_loop(EX41, law, x, 2, coarse).states
    sy = simulate_closed_loop(EX41, law, y, 2, coarse).states
    sxy = simulate_closed_loop(EX41, law, a * x + b * y, 2, coarse).states
    assert np.max(np.abs(sxy - (a * sx + b * sy))) <= 1e-10 * (1 + np.abs(sxy).max())


@pytest.mark.parametrize("schedule", [SwitchingSchedule(1, 1, 1), SCHEDULE_GHAT, SCHEDULE_GBAR])
def test_cycle_map_is_monodromy(schedule, coarse, rng):
    law = FeedbackLaw(GAIN_41, schedule)
    Lam = monodromy_propagate(EX41, law, coarse)
    xs = simulate_closed_loop(EX41, law, rng.normal(size=2), 3, coarse).cycle_states()
    for k in range(3):
        assert np.max(np.abs(xs[k + 1] - Lam @ xs[k])) <= 1e-10 * (1 + np.abs(xs[k + 1]).max())


def test_propagate_linear_batched(coarse):
    G = np.stack([GAIN_41, 0.5 * GAIN_41])
    X = np.eye(2)
    out = propagate_linear(EX41, G, SCHEDULE_GHAT, X, 3, coarse)
    assert out.shape == (2, 2, 2)
    one = propagate_linear(EX41, 0.5 * GAIN_41, SCHEDULE_GHAT, X[:, 1], 3, coarse)
    assert np.allclose(out[1][:, 1], one, rtol=1e-13, atol=1e-13)


@pytest.mark.parametrize("schedule", [SwitchingSchedule(1, 1, 1), SCHEDULE_GHAT,
                                      SwitchingSchedule(3, 2, 2)])
def test_linear_simulation_against_method_of_steps(schedule):
    law = FeedbackLaw(GAIN_41, schedule)
    traj = simulate_closed_loop(EX41, law, X0_41, 1, IntegratorConfig(2000))
    ref = method_of_steps(EX41, law, X0_41, schedule.cycle)
    assert np.allclose(traj.period_states(), ref, rtol=1e-9, atol=1e-9)


@pytest.mark.slow
def test_nonlinear_simulation_against_method_of_steps():
    law = FeedbackLaw(GAIN_42)
    x0 = np.array([1.0, -0.05])
    traj = simulate_closed_loop(EX42, law, x0, 2)
    ref = method_of_steps(EX42, law, x0, 4)
    assert np.max(np.abs(traj.period_states() - ref)) <= 1e-8


def test_nonlinear_on_orbit_stays(coarse):
    traj = simulate_closed_loop(EX42, FeedbackLaw(GAIN_42), EX42.periodic_solution(0.0), 2, coarse)
    assert np.max(np.abs(traj.inputs)) <= 1e-6
    r = np.linalg.norm(traj.states, axis=1)
    assert np.max(np.abs(r - 1)) <= 1e-6


def test_first_order_mismatch_is_quadratic(vs42, coarse):
    Lam = monodromy_propagate(vs42.base, FeedbackLaw(GAIN_42), coarse)
    x_star0 = EX42.periodic_solution(0.0)
    direction = np.array([0.6, 0.8])
    errs = []
    for delta in (1e-3, 5e-4):
        dx = delta * direction
        xs = simulate_closed_loop(EX42, FeedbackLaw(GAIN_42), x_star0 + dx, 1, coarse)
        errs.append(np.linalg.norm(xs.cycle_states()[1] - x_star0 - Lam @ dx))
    assert 3.0 <= errs[0] / errs[1] <= 5.0


# ---- limit prediction -----------------------------------------------------

def test_predicted_coefficients_with_orbit_basis(lam41):
    pred = predict_limit(lam41, X0_41, unit_vectors=EX41.x_star(0.0))
    assert np.allclose(pred.alphas.real, [0.9907, -0.1178], atol=2e-3)
    assert pred.kappa == 1
    assert np.allclose(pred.limit_point, pred.alphas[0].real * EX41.x_star(0.0))
    assert np.allclose(pred.reconstruct(), X0_41, atol=1e-12)


def test_prediction_on_eigenvectors(lam41):
    vals, vecs = eigendecompose(lam41)
    v1, v2 = vecs[:, 0].real, vecs[:, 1].real
    assert np.allclose(predict_limit(lam41, v1).limit_point, v1, atol=1e-9)
    assert np.allclose(predict_limit(lam41, v2).limit_point, 0.0, atol=1e-9)
    assert np.allclose(predict_limit(lam41, np.zeros(2)).limit_point, 0.0)


def test_prediction_requires_convergence():
    with pytest.raises(PreconditionError):
        predict_limit(np.diag([2.0, 1.0]), [1.0, 1.0])
    with pytest.raises(PreconditionError):
        predict_limit(np.diag([0.5, 0.1]), [1.0, 1.0])


def test_prediction_rejects_bad_unit_vectors(lam41):
    with pytest.raises(DomainError):
        predict_limit(lam41, X0_41, unit_vectors=[1.0, 0.0])


def test_ill_conditioned_basis_warns():
    eps = 1e-12
    V = np.array([[1.0, 1.0], [0.0, eps]])
    M = V @ np.diag([1.0, 0.5]) @ np.linalg.inv(V)
    with pytest.warns(RuntimeWarning):
        pred = predict_limit(M, [1.0, 0.0])
    assert pred.warning is not None


def test_convergence_diagnostics(lam41):
    traj = simulate_closed_loop(EX41, LAW41, X0_41, 10)
    pred = predict_limit(lam41, X0_41)
    diag = convergence_diagnostics(traj, pred)
    assert len(diag.distances) == 11
    assert diag.distances[10] <= 1e-4 * diag.distances[1]
    assert diag.final <= 1e-9
    # before the round-off floor the tail is monotone
    short = convergence_diagnostics(simulate_closed_loop(EX41, LAW41, X0_41, 6), pred)
    assert short.monotone_tail


def test_diagnostics_needs_three_cycles(coarse):
    traj = simulate_closed_loop(EX41, LAW41, X0_41, 2, coarse)
    with pytest.raises(DomainError):
        convergence_diagnostics(traj, np.zeros(2))


def test_unstable_schedule_amplifies_perturbation(vs42, coarse):
    law = FeedbackLaw(GAIN_42, SCHEDULE_GHAT)
    Lam = monodromy_propagate(vs42.base, law, coarse)
    vals, vecs = eigendecompose(Lam)
    dx = 1e-6 * vecs[:, 0].real
    traj = simulate_closed_loop(vs42.base, law, dx, 3, coarse)
    d = np.linalg.norm(traj.cycle_states(), axis=1)
    assert d[3] >= 10 * d[0]


def test_divergence_reports_partial_trajectory(vs42, coarse):
    law = FeedbackLaw(GAIN_42, SCHEDULE_GHAT)
    with pytest.raises(DivergenceError) as info:
        simulate_closed_loop(vs42.base, law, np.array([1.0, 0.0]), 20, coarse)
    err = info.value
    states, inputs, switch = err.partial
    assert np.all(np.isfinite(states)) and len(states) > coarse.steps_per_period
    assert np.all(np.abs(states) < 1e12)
    assert 0 < err.time < 60


def test_simulation_argument_checks(coarse):
    with pytest.raises(DomainError):
        simulate_closed_loop(EX41, LAW41, X0_41, 0, coarse)
    with pytest.raises(DomainError):
        simulate_closed_loop(EX41, LAW41, np.zeros(3), 1, coarse)
    with pytest.raises(DomainError):
        simulate_closed_loop(EX41, FeedbackLaw(np.ones((2, 2))), X0_41, 1, coarse)
