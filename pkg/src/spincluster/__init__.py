"""Numerical simulator for generating M x N photonic cluster states from a
single electron-spin-photon interface coupled to a nuclear spin register."""

__version__ = "1.0.0"

from .states import (
    QuantumState, QubitRole, RoleKind, Unitary, apply_gate, add_photon_qubit,
    project_measure, partial_trace, state_fidelity, max_pure_fidelity,
)
from .hamiltonian import (
    SpinSystemParams, RotatingFrameParams, PrecessionAxes,
    rotating_hamiltonian, free_hamiltonian, precession_axes,
    resonance_spacing, propagator, evolve,
)
from .noise import OUNoise, ou_from_coherence, sample_trajectory
from .synthesis import (
    DDSequence, SynthesisReport, dd_unit, sequence_unitary, gate_fidelity,
    synthesize, noisy_gate_fidelity, serialize_sequence, deserialize_sequence,
)
from .protocol import (
    ProtocolSpec, ProtocolResult, build_schedule, emit_photon, run,
    ideal_target, lu_equivalence, verify_appendix_a, ideal_library,
    packaged_gate_library,
)
from .emission import EmissionParams, dephased_state, emission_fidelity, colour_encoding_floor
from .budget import (
    EfficiencyBudget, FidelityBudget, extrapolated_fidelity, generation_rate,
    minimize_sequence_field,
)
