"""Numerical models of a cavity-mediated two-qubit phase gate.

The package builds the full ion-ion-cavity model, its cavity-eliminated
master equation, the dispersive nine-level Hamiltonian and the two-level
reduced model, integrates them with a common fixed-step engine, and scores
the resulting conditional phase gate.  A geometric (adiabatic loop) variant
of the gate is included alongside its Berry phase bookkeeping.
"""

import os as _os

# Byte-identical reruns are part of the output contract, and threaded BLAS
# reductions are the one place the stack could reorder floating-point sums.
# Pin the pools to one thread unless the caller decided otherwise; this has
# to happen before numpy is first imported anywhere in the process.
for _var in (
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "OMP_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
):
    _os.environ.setdefault(_var, "1")
del _os, _var

__version__ = "0.1.0"

from .hilbert import (
    DensityMatrix,
    HilbertSpec,
    Operator,
    StateVector,
    annihilation,
    basis_state,
    ion_transition,
    reduce_to_ions,
    superpose,
    tensor,
)
from .models import (
    JumpSet,
    SystemParams,
    collect_jump_operators,
    dispersive_hamiltonian,
    eliminated_generator,
    full_hamiltonian,
    geometric_hamiltonian,
    phi_state,
    reduced_hamiltonian,
)
from .dynamics import (
    IntegrationError,
    StepControl,
    Trajectory,
    evolve_conditional,
    evolve_master,
    evolve_schrodinger,
    lindblad_rhs,
    propagator_oracle,
    state_metrics,
    trace_distance,
)
from .gates import (
    GateReport,
    ScanRow,
    extract_gate,
    gate_fidelity,
    ideal_phase_gate,
    regime_scan,
)
from .berry import (
    BerryReport,
    LoopPath,
    LoopSegment,
    adiabatic_run,
    drive_amplitudes,
    standard_loop,
    surface_integral,
)

__all__ = [
    "__version__",
    "DensityMatrix",
    "HilbertSpec",
    "Operator",
    "StateVector",
    "annihilation",
    "basis_state",
    "ion_transition",
    "reduce_to_ions",
    "superpose",
    "tensor",
    "JumpSet",
    "SystemParams",
    "collect_jump_operators",
    "dispersive_hamiltonian",
    "eliminated_generator",
    "full_hamiltonian",
    "geometric_hamiltonian",
    "phi_state",
    "reduced_hamiltonian",
    "IntegrationError",
    "StepControl",
    "Trajectory",
    "evolve_conditional",
    "evolve_master",
    "evolve_schrodinger",
    "lindblad_rhs",
    "propagator_oracle",
    "state_metrics",
    "trace_distance",
    "GateReport",
    "ScanRow",
    "extract_gate",
    "gate_fidelity",
    "ideal_phase_gate",
    "regime_scan",
    "BerryReport",
    "LoopPath",
    "LoopSegment",
    "adiabatic_run",
    "drive_amplitudes",
    "standard_loop",
    "surface_integral",
]
