"""
Frequency-distribution baseline for rydberg_rbm
"""

from rydberg_rbm.baseline.frequency import (
    FdModel,
    build_fd,
    classical_fidelity,
    fd_state_fidelity,
    fidelity_bound,
    distribution_renyi2,
    model_size,
)

__all__ = [
    'FdModel',
    'build_fd',
    'classical_fidelity',
    'fd_state_fidelity',
    'fidelity_bound',
    'distribution_renyi2',
    'model_size',
]
