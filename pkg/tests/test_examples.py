import math

import numpy as np
import pytest

from floquet_aaw.examples import (EX41, EX41_SOLUTION, EX42, ExampleEntry, Golden,
                                  example_names, get_example)


def test_registry_names():
    assert example_names() == ["ex41", "ex42", "ex42-ghat", "ex42-gbar"]
    for name in example_names():
        entry = get_example(name)
        assert isinstance(entry, ExampleEntry) and entry.name == name
        assert len(entry.x0) == entry.system.dim


def test_unknown_example_lists_known_names():
    with pytest.raises(KeyError, match="ex41"):
        get_example("nope")


def test_every_golden_is_cited():
    for name in example_names():
        for key, g in get_example(name).goldens.items():
            assert isinstance(g, Golden) and g.citation.strip(), (name, key)
            assert g.tol > 0


def test_golden_check():
    g = Golden([1.0, 2.0], 1e-3, "x")
    err, ok = g.check([1.0005, 2.0])
    assert ok and err == pytest.approx(5e-4)
    assert not g.check([1.1, 2.0])[1]
    r = Golden(-25.9876, 2e-2, "x", relative=True)
    assert r.check(-25.5)[1] and not r.check(-20.0)[1]


def test_linear_example_periodic_solution():
    assert np.max(np.abs(EX41.x_star(1.0) - EX41.x_star(0.0))) <= 1e-12
    assert EX41.x_star(0.0) == pytest.approx([1 / (1 + 16 * math.pi ** 2) - 2, 1.0])
    assert EX41_SOLUTION.periodicity_defect() <= 1e-12
    for t in np.linspace(0, 1, 13):
        a22 = EX41.A(t)[1, 1]
        assert np.isfinite(a22)
        lhs = EX41_SOLUTION.velocity(t)
        assert np.max(np.abs(lhs - EX41.A(t) @ EX41.x_star(t))) <= 1e-9


def test_nonlinear_example_orbit():
    sol = EX42.periodic_solution
    for t in np.linspace(0, 1, 13):
        x = sol(t)
        assert x @ x == pytest.approx(1.0, abs=1e-14)
    assert sol.velocity(0.0) == pytest.approx([0.0, -2 * math.pi])
    assert EX42.orbit_residual() <= 1e-8
    assert EX42.period == 1.0
