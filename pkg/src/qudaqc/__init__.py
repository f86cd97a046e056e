"""Digital-analog compilation and simulation for d-level quantum systems.

The pipeline: express one- and two-body qudit Hamiltonians in the
Weyl-Heisenberg basis, build the root-of-unity phase matrix of gate-word
conjugations, solve for nonnegative analog block durations, and execute the
resulting schedules (stepwise or banged) under a thermal and gate-error noise
model, against a digital brick-wall baseline.
"""

from .hamiltonian import (
    CouplingTerm,
    LocalTerm,
    QuditHamiltonian,
    blbq_problem,
    check_compatibility,
    from_spin_terms,
    zz_source,
)
from .phase_matrix import GateWord, PhaseMatrix, build_matrix, enumerate_words
from .simulator import NoiseModel, QuantumState, ghz_state, state_fidelity, sweep
from .solver import (
    CompatibilityError,
    CompileOptions,
    InfeasibleError,
    Schedule,
    compile_schedule,
    gate_count,
)
from .weyl import WeylDecomposition, decompose, spin_operator, weyl_operator

__version__ = "0.1.0"

__all__ = [
    "CouplingTerm",
    "LocalTerm",
    "QuditHamiltonian",
    "blbq_problem",
    "check_compatibility",
    "from_spin_terms",
    "zz_source",
    "GateWord",
    "PhaseMatrix",
    "build_matrix",
    "enumerate_words",
    "NoiseModel",
    "QuantumState",
    "ghz_state",
    "state_fidelity",
    "sweep",
    "CompatibilityError",
    "CompileOptions",
    "InfeasibleError",
    "Schedule",
    "compile_schedule",
    "gate_count",
    "WeylDecomposition",
    "decompose",
    "spin_operator",
    "weyl_operator",
    "__version__",
]
