"""Act-and-wait delayed feedback control of periodic orbits.

Closed-loop monodromy matrices (integral formula and direct propagation),
Floquet stability verdicts, variational systems of autonomous flows,
closed-loop simulation with an exact delay buffer, and gain search.
"""

__version__ = "0.1.0"

from .model import (BASE_SCHEDULE, DomainError, FeedbackLaw, LinearPeriodicSystem,
                    NonlinearAutonomousSystem, PeriodicSolution, SwitchingSchedule, switch_value)
from .odeint import (DEFAULT_CONFIG, DivergenceError, IntegratorConfig, TransitionMatrix,
                     integrate_ode, transition_matrix)
from .floquet import (MonodromyReport, NumericalError, Verdict, analyze, eigendecompose,
                      monodromy, monodromy_integral, monodromy_propagate, stability_verdict,
                      unit_eigen_analysis)
from .variational import VariationalSystem, build_variational, verify_unit_eigenvector
from .simulate import (LimitPrediction, PreconditionError, Trajectory, convergence_diagnostics,
                       predict_limit, simulate_closed_loop)
from .gainsearch import GainSearchResult, GainSearchSpec, objective, search
from .examples import ExampleEntry, get_example, example_names
