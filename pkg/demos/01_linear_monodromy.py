"""Stability of a linear periodic system under act-and-wait feedback.

Run with ``python demos/01_linear_monodromy.py``.
"""
import numpy as np

from floquet_aaw import FeedbackLaw, analyze, monodromy_propagate, transition_matrix
from floquet_aaw.examples import EX41, GAIN_41

np.set_printoptions(precision=6, suppress=True)

# %% The plant is 1-periodic and unstable on its own. Its transition matrix
# over one period has a multiplier e^0.5 > 1 next to the structural 1 that
# belongs to the periodic solution x*.
Phi = transition_matrix(EX41).value
print("Phi(T, 0) =\n", Phi)
print("open-loop multipliers:", np.linalg.eigvals(Phi))

# %% Act-and-wait: wait one period with the controller off, then act for one
# period with u = -F (x(t) - x(t - T)). Over the two-period cycle the loop
# is finite-dimensional, so a single 2x2 matrix decides stability.
law = FeedbackLaw(GAIN_41)
report = analyze(EX41, law)
print("Lambda =\n", report.Lambda)
print("multipliers:", report.eigenvalues.real)
print("verdict:", report.verdict.value)

# %% The structural multiplier 1 survives any gain because the input
# vanishes on x*. Its eigenvector is x*(0) up to scale.
v = report.unit_eigenvector().real
x0 = EX41.x_star(0.0)
print("cosine(v1, x*(0)) =", abs(v @ x0) / np.linalg.norm(x0))

# %% The propagation route (closed-loop simulation of each basis vector)
# reaches the same matrix through different arithmetic.
other = monodromy_propagate(EX41, law)
print("route difference:", np.max(np.abs(other - report.Lambda)))
