"""Scanning for stabilizing gains.

The objective is the largest multiplier modulus once the structural 1 is
removed; values below 1 stabilize. Set FLOQUET_AAW_THREADS to cap the pool.
"""
import numpy as np

from floquet_aaw import GainSearchSpec, IntegratorConfig, search
from floquet_aaw.examples import EX41, SCHEDULE_G

cfg = IntegratorConfig(400)   # coarse grid is plenty for a scan
spec = GainSearchSpec(lower=[[0.0, 0.0]], upper=[[6.0, 2.0]], grid_points=21)
res = search(EX41, SCHEDULE_G, spec, cfg)

print("grid best:", res.grid_best_F, f"{res.grid_best_objective:.3e}")
print("refined  :", res.best_F, f"{res.best_objective:.3e}", res.verdict.value)
print(f"{len(res.stable)} of {spec.grid_size} grid gains stabilize")

# %% A coarse text map of the objective over the box: '#' stable, '.' not.
stable = {tuple(np.round(F.ravel(), 9)) for F, _ in res.stable}
f1, f2 = spec.axes()
for b in f2[::-1]:
    print("".join("#" if (round(a, 9), round(b, 9)) in stable else "." for a in f1))
