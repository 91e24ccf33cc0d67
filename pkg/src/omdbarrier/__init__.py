"""Online mirror descent for self-concordant, relatively smooth log-losses.

Learners for online portfolio selection on the simplex (clipped
exponentiated gradient, log-barrier mirror descent, log-barrier FTRL) and
for online learning of quantum states on density matrices (log-det mirror
descent), plus offline comparators and numerical verifiers.
"""

__version__ = "0.1.0"

from .core import (ExperimentLog, MirrorMap, OmdState, ProxError, ScheduleError, eg_schedule,
                   lb_schedule, lbftrl_eta, omd_round, regret_trace, omd_regret_bound)
from .simplex import (EntropyMap, LogBarrierMap, NewtonSolveReport, entropy_prox,
                      lbftrl_leader, logbarrier_prox)
from .ops import eg_round, lbftrl_round, lbomd_round, ops_gradient
from .quantum import (LogDetMap, clipped_comparator, logdet_prox, qlbomd_round,
                      quantum_gradient, sample_measurement)
from .comparator import ComparatorResult, best_crp, best_fixed_state
