"""
Quantum module for rydberg_rbm

Chain Hamiltonian, exact ground states, Lindblad and unitary sweeps, state
algebra (partial trace, Renyi entropies, fidelities) and measurement sampling.
"""

from rydberg_rbm.quantum.params import HamiltonianParams, SweepProfile, LindbladParams
from rydberg_rbm.quantum.states import (
    QuantumState,
    partial_trace,
    purity,
    renyi_entropy,
    mutual_information_exact,
    fidelity,
    subsystem_avg_fidelity,
    subsystem_avg_renyi2,
    positive_pure_partner,
    approx_z2_state,
)
from rydberg_rbm.quantum.hamiltonian import (
    build_hamiltonian,
    ground_state,
    ground_energy,
    effective_blockade_hamiltonian,
)
from rydberg_rbm.quantum.lindblad import evolve_lindblad, evolve_disorder_averaged, evolve_unitary
from rydberg_rbm.quantum.measurement import sample_measurements

__all__ = [
    'HamiltonianParams',
    'SweepProfile',
    'LindbladParams',
    'QuantumState',
    'partial_trace',
    'purity',
    'renyi_entropy',
    'mutual_information_exact',
    'fidelity',
    'subsystem_avg_fidelity',
    'subsystem_avg_renyi2',
    'positive_pure_partner',
    'approx_z2_state',
    'build_hamiltonian',
    'ground_state',
    'ground_energy',
    'effective_blockade_hamiltonian',
    'evolve_lindblad',
    'evolve_disorder_averaged',
    'evolve_unitary',
    'sample_measurements',
]
