"""The two worked systems and their schedule variants, with reference values.

``ex41`` is a two-dimensional linear 1-periodic system with a single input;
``ex42`` is a planar autonomous system with an unstable unit-circle orbit,
analyzed through its variational system. ``ex42-ghat`` and ``ex42-gbar``
reuse the ``ex42`` gain with longer act spans or a two-period delay.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .model import (FeedbackLaw, LinearPeriodicSystem, NonlinearAutonomousSystem,
                    PeriodicSolution, SwitchingSchedule)

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class Golden:
    value: object
    tol: float
    citation: str
    relative: bool = False

    def check(self, got):
        want = np.asarray(self.value, dtype=complex)
        got = np.asarray(got, dtype=complex)
        err = np.max(np.abs(got - want))
        if self.relative:
            err = err / np.max(np.abs(want))
        return float(err), bool(err <= self.tol)


@dataclass(frozen=True)
class ExampleEntry:
    name: str
    system: Union[LinearPeriodicSystem, NonlinearAutonomousSystem]
    law: FeedbackLaw
    goldens: dict = field(default_factory=dict)
    description: str = ""
    x0: tuple = ()


# ---- linear example -------------------------------------------------------

def _a41(t):
    s, c = math.sin(TWO_PI * t), math.cos(TWO_PI * t)
    return np.array([[0.5, 0.5], [0.0, TWO_PI * s / (2 - c)]])


def _b41(t):
    s = math.sin(TWO_PI * t)
    return np.array([[0.0], [1 + s * s]])


def _xstar41(t):
    s, c = math.sin(TWO_PI * t), math.cos(TWO_PI * t)
    return np.array([(c - 4 * math.pi * s) / (1 + 16 * math.pi ** 2) - 2, 2 - c])


def _xstar41_dot(t):
    s, c = math.sin(TWO_PI * t), math.cos(TWO_PI * t)
    return np.array([TWO_PI * (-s - 4 * math.pi * c) / (1 + 16 * math.pi ** 2), TWO_PI * s])


EX41 = LinearPeriodicSystem(2, 1, 1.0, _a41, _b41, x_star=_xstar41, name="ex41")
EX41_SOLUTION = PeriodicSolution(1.0, _xstar41, _xstar41_dot)


# ---- nonlinear example ----------------------------------------------------

def _f42(x):
    x1, x2 = x[0], x[1]
    phi = x1 * x1 + x2 * x2
    g = phi - phi * phi
    return np.array([-x1 * g + TWO_PI * x2, -x2 * g - TWO_PI * x1])


def _jac42(x):
    x1, x2 = x[0], x[1]
    phi = x1 * x1 + x2 * x2
    g = phi - phi * phi
    dg = 1 - 2 * phi          # d g / d phi
    return np.array([
        [-g - 2 * x1 * x1 * dg, -2 * x1 * x2 * dg + TWO_PI],
        [-2 * x1 * x2 * dg - TWO_PI, -g - 2 * x2 * x2 * dg],
    ])


def _xstar42(t):
    return np.array([math.cos(TWO_PI * t), -math.sin(TWO_PI * t)])


def _xstar42_dot(t):
    return np.array([-TWO_PI * math.sin(TWO_PI * t), -TWO_PI * math.cos(TWO_PI * t)])


EX42 = NonlinearAutonomousSystem(2, _f42, PeriodicSolution(1.0, _xstar42, _xstar42_dot),
                                 jacobian=_jac42, name="ex42")

GAIN_41 = np.array([[4.5, 0.6]])
GAIN_42 = np.array([[0.7, 4.1], [-4.1, 0.7]])
SCHEDULE_G = SwitchingSchedule(1, 1, 1)
SCHEDULE_GHAT = SwitchingSchedule(1, 2, 1)
SCHEDULE_GBAR = SwitchingSchedule(2, 2, 2)

_SRC41 = "linear worked example"
_SRC42 = "limit-cycle worked example"

_REGISTRY = {
    "ex41": ExampleEntry(
        "ex41", EX41, FeedbackLaw(GAIN_41, SCHEDULE_G),
        {
            "Phi_T": Golden([[1.6487, 1.2934], [0.0, 1.0]], 5e-3,
                            f"{_SRC41}: uncontrolled monodromy matrix"),
            "Lambda": Golden([[1.6857, 1.3671], [-0.8273, -0.6495]], 5e-3,
                             f"{_SRC41}: closed-loop monodromy matrix, F=[4.5, 0.6]"),
            "eigenvalues": Golden([1.0, 0.0362], 5e-3, f"{_SRC41}: lambda_1, lambda_2"),
            "v1": Golden([-1.9937, 1.0], 1e-4, f"{_SRC41}: v_1 = x*(0) (direction)"),
            "v2": Golden([-0.6381, 0.7699], 5e-3, f"{_SRC41}: v_2"),
            "alphas": Golden([0.9907, -0.1178], 2e-3,
                             f"{_SRC41}: alpha_1, alpha_2 for x0=[-1.9, 0.9]"),
        },
        "linear 1-periodic system, F=[4.5, 0.6], one period off / one on",
        (-1.9, 0.9),
    ),
    "ex42": ExampleEntry(
        "ex42", EX42, FeedbackLaw(GAIN_42, SCHEDULE_G),
        {
            "Lambda": Golden([[-0.0093, 0.0], [-6.5898, 1.0]], 5e-3,
                             f"{_SRC42}: variational monodromy matrix"),
            "eigenvalues": Golden([1.0, -0.0093], 5e-3, f"{_SRC42}: lambda_2, lambda_1"),
            "v_unit": Golden([0.0, -1.0], 1e-4, f"{_SRC42}: v_2 (direction)"),
            "v1": Golden([-0.1514, -0.9885], 5e-3, f"{_SRC42}: v_1"),
        },
        "planar unstable limit cycle, base schedule",
        (1.0, -0.05),
    ),
    "ex42-ghat": ExampleEntry(
        "ex42-ghat", EX42, FeedbackLaw(GAIN_42, SCHEDULE_GHAT),
        {"unstable_eigenvalue": Golden(-25.9876, 2e-2,
                                       f"{_SRC42}: one period off, two on", relative=True)},
        "same gain, one period off / two on",
        (1.0, -0.05),
    ),
    "ex42-gbar": ExampleEntry(
        "ex42-gbar", EX42, FeedbackLaw(GAIN_42, SCHEDULE_GBAR),
        {"unstable_eigenvalue": Golden(69.4489, 2e-2,
                                       f"{_SRC42}: two off / two on, delay 2T", relative=True)},
        "same gain, two periods off / two on, delay 2T",
        (1.0, -0.05),
    ),
}


def example_names():
    return list(_REGISTRY)


def get_example(name):
    """Look up a built-in example by name.

    Raises
    ------
    KeyError
        Unknown name; the message lists the known ones.
    """
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown example {name!r}; known: {', '.join(_REGISTRY)}") from None
