"""Where does the controlled linear system end up?

Decomposing x0 in the eigenbasis of the monodromy matrix predicts the limit:
components along stable eigenvectors decay, the unit component stays.
"""
import numpy as np

from floquet_aaw import (FeedbackLaw, convergence_diagnostics, monodromy_integral,
                         predict_limit, simulate_closed_loop)
from floquet_aaw.examples import EX41, GAIN_41

np.set_printoptions(precision=6, suppress=True)

x0 = np.array([-1.9, 0.9])
Lam = monodromy_integral(EX41, GAIN_41)

# Scaling the unit eigenvector to x*(0) makes alpha_1 the amplitude of the
# periodic solution we converge to.
pred = predict_limit(Lam, x0, unit_vectors=EX41.x_star(0.0))
print("alphas:", pred.alphas.real)
print("predicted x(2kT) ->", pred.limit_point)

# %% Simulate 12 cycles and watch the distance to the prediction shrink by
# roughly the second multiplier (about 0.036) per cycle.
traj = simulate_closed_loop(EX41, FeedbackLaw(GAIN_41), x0, 12)
diag = convergence_diagnostics(traj, pred)
for k, d in enumerate(diag.distances):
    print(f"cycle {k:2d}  distance {d:.3e}")

# %% Inputs are zero during waits and decay during acts.
N = traj.steps_per_period
for k in range(0, 12, 3):
    act = traj.inputs[(2 * k + 1) * N:(2 * k + 2) * N]
    print(f"cycle {k:2d}  max |u| = {np.abs(act).max():.3e}")
