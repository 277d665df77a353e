"""Step-machine simulator and verifiers for one-shot timestamp algorithms
built from atomic read/write registers."""

from .core import (BOT, GetTsId, PhaseTimestamp, Reg, SimpleTimestamp,
                   compare, registers_for_phase, registers_for_simple,
                   simple_compare)
from .machines import (ModelViolation, PhaseMachine, Read, SimpleMachine,
                       Write, init_phase, init_simple)
from .simulator import (BudgetExceeded, ExecState, SimulationError, Workload,
                        explore, run_schedule, run_to_completion)
from .traces import Trace, TraceBuilder
from .verify import (HappensBefore, PhasePartition, Verdict,
                     check_invalidation_accounting, check_ordering,
                     check_register_claims, check_simple_algorithm,
                     check_space, check_wait_freedom, compute_phases, run_all)

__version__ = "0.1.0"

__all__ = [
    "BOT", "GetTsId", "PhaseTimestamp", "Reg", "SimpleTimestamp",
    "compare", "simple_compare", "registers_for_phase", "registers_for_simple",
    "ModelViolation", "PhaseMachine", "SimpleMachine", "Read", "Write",
    "init_phase", "init_simple",
    "BudgetExceeded", "ExecState", "SimulationError", "Workload",
    "explore", "run_schedule", "run_to_completion",
    "Trace", "TraceBuilder",
    "HappensBefore", "PhasePartition", "Verdict",
    "check_invalidation_accounting", "check_ordering",
    "check_register_claims", "check_simple_algorithm", "check_space",
    "check_wait_freedom", "compute_phases", "run_all",
]
