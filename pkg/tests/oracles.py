"""Independent references built on scipy's adaptive DOP853 (method of steps)."""
import numpy as np
from scipy.integrate import solve_ivp

from floquet_aaw.model import LinearPeriodicSystem


def method_of_steps(system, law, x0, n_periods, rtol=1e-12, atol=1e-13):
    """States at every multiple of T for the act-and-wait closed loop.

    Each period is one adaptive solve; the delayed state is read from the
    dense output of the period ``d`` earlier.
    """
    T = system.period
    F = np.asarray(law.gain)
    sched = law.schedule
    linear = isinstance(system, LinearPeriodicSystem)
    dense = []
    x = np.asarray(x0, dtype=float)
    out = [x]
    for p in range(n_periods):
        t0 = p * T
        on = sched.active(p)
        past = dense[p - sched.delay] if on else None

        def rhs(t, y):
            base = system.A(t) @ y if linear else np.asarray(system.f(y))
            if not on:
                return base
            u = -F @ (y - past(t - sched.delay * T))
            return base + (system.B(t) @ u if linear else u)

        sol = solve_ivp(rhs, (t0, t0 + T), x, method="DOP853", rtol=rtol, atol=atol,
                        dense_output=True)
        dense.append(sol.sol)
        x = sol.y[:, -1]
        out.append(x)
    return np.array(out)


def monodromy_by_steps(system, law):
    P = law.schedule.cycle
    cols = [method_of_steps(system, law, e, P)[-1] for e in np.eye(system.dim)]
    return np.column_stack(cols)
