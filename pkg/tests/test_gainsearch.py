import math

import numpy as np
import pytest

from floquet_aaw import IntegratorConfig
from floquet_aaw.examples import EX41, GAIN_41, GAIN_42, SCHEDULE_G, SCHEDULE_GHAT
from floquet_aaw.floquet import Verdict, stability_verdict
from floquet_aaw.gainsearch import (GainSearchSpec, _monodromies, law_from, objective,
                                    radius_excluding_unit, search, worker_count)
from floquet_aaw.model import DomainError

BOX41 = GainSearchSpec([[0.0, 0.0]], [[6.0, 2.0]], grid_points=21)


def test_objective_examples(vs42):
    assert objective(EX41, SCHEDULE_G, GAIN_41) == pytest.approx(0.0362, abs=5e-3)
    assert objective(EX41, SCHEDULE_G, [[0.0, 0.0]]) == pytest.approx(math.e, abs=1e-3)
    assert objective(vs42.base, SCHEDULE_G, GAIN_42) == pytest.approx(0.0093, abs=2e-3)


def test_objective_divergence_is_infinite(vs42, coarse):
    huge = 1e4 * GAIN_42
    assert objective(vs42.base, SCHEDULE_GHAT, huge, coarse) == math.inf


@pytest.mark.parametrize("M, value, anomalous", [
    (np.diag([1.0, 0.3, -0.5]), 0.5, False),
    (np.diag([0.3, -0.5]), 0.5, True),
    (np.diag([1.0, 1.0, 0.2]), 1.0, True),
    (np.diag([1.0]), 0.0, False),
])
def test_radius_excluding_unit(M, value, anomalous):
    assert radius_excluding_unit(M) == (pytest.approx(value), anomalous)


def test_search_linear_example(coarse):
    res = search(EX41, SCHEDULE_G, BOX41, coarse, workers=2)
    assert res.best_objective < 1
    assert res.verdict is Verdict.CONVERGES
    assert res.best_objective <= res.grid_best_objective
    assert res.evaluation_count >= 21 * 21
    assert res.stable
    assert law_from(res).gain.shape == (1, 2)
    # fresh recomputation
    assert abs(objective(EX41, SCHEDULE_G, res.best_F, coarse) - res.best_objective) <= 1e-10
    for F, value in res.stable:
        Lam = _monodromies(EX41, SCHEDULE_G, F[None], coarse)[0]
        assert value < 1
        assert stability_verdict(Lam).verdict is Verdict.CONVERGES


def test_search_is_deterministic_across_workers(coarse):
    spec = GainSearchSpec([[0.0, 0.0]], [[6.0, 2.0]], grid_points=9)
    a = search(EX41, SCHEDULE_G, spec, coarse, workers=1)
    b = search(EX41, SCHEDULE_G, spec, coarse, workers=4)
    assert np.array_equal(a.best_F, b.best_F)
    assert a.best_objective == b.best_objective
    assert a.evaluation_count == b.evaluation_count
    assert [f.tolist() for f, _ in a.stable] == [f.tolist() for f, _ in b.stable]


def test_degenerate_box_returns_the_gain():
    spec = GainSearchSpec(GAIN_41, GAIN_41)
    res = search(EX41, SCHEDULE_G, spec)
    assert np.array_equal(res.best_F, GAIN_41)
    assert res.best_objective == pytest.approx(0.0362, abs=5e-3)
    assert res.evaluation_count == 1


def test_unstable_schedule_single_gain(vs42, coarse):
    res = search(vs42.base, SCHEDULE_GHAT, GainSearchSpec(GAIN_42, GAIN_42), coarse)
    assert res.verdict is Verdict.UNSTABLE
    assert res.best_objective == pytest.approx(25.99, rel=2e-2)
    assert res.stable == []


def test_grid_ties_go_to_smallest_gain(coarse):
    # F = 0 everywhere on a one-point grid per axis except the first
    spec = GainSearchSpec([[0.0, 0.0]], [[0.0, 0.0]])
    res = search(EX41, SCHEDULE_G, spec, coarse)
    assert np.array_equal(res.grid_best_F, [[0.0, 0.0]])


def test_spec_validation():
    with pytest.raises(DomainError):
        GainSearchSpec([[1.0, 0.0]], [[0.0, 1.0]])
    with pytest.raises(DomainError):
        GainSearchSpec([[0.0]], [[1.0, 1.0]])
    with pytest.raises(DomainError):
        GainSearchSpec([[0.0, 0.0]], [[np.inf, 1.0]])
    with pytest.raises(DomainError):
        GainSearchSpec(np.zeros((2, 2)), np.ones((2, 2)), grid_points=100)  # 10^8 points
    with pytest.raises(DomainError):
        search(EX41, SCHEDULE_G, GainSearchSpec(np.zeros((2, 2)), np.ones((2, 2)), 2))
    assert GainSearchSpec([[0.0, 1.0]], [[2.0, 1.0]], 5).grid_size == 5


def test_worker_count_environment(monkeypatch):
    monkeypatch.setenv("FLOQUET_AAW_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("FLOQUET_AAW_THREADS", "0")
    assert worker_count() >= 1
    monkeypatch.setenv("FLOQUET_AAW_THREADS", "x")
    with pytest.raises(DomainError):
        worker_count()
