"""
Estimators module for rydberg_rbm

Diagonal correlators, local-estimator Monte Carlo, swap-trick Renyi entropies
and forward-noised predictions.
"""

from rydberg_rbm.estimators.observables import (
    ObservableResult,
    LocalOperator,
    DiagonalObservable,
    diagonal_correlator,
    avg_correlator,
    local_estimator_expectation,
    exact_expectation,
    transverse_profile,
    xx_connected,
    avg_transverse_field,
    avg_xx_correlator,
    renyi2_swap,
    renyi2_exact,
    swap_expectation_exact,
    mutual_information_rbm,
    forward_noise,
)

__all__ = [
    'ObservableResult',
    'LocalOperator',
    'DiagonalObservable',
    'diagonal_correlator',
    'avg_correlator',
    'local_estimator_expectation',
    'exact_expectation',
    'transverse_profile',
    'xx_connected',
    'avg_transverse_field',
    'avg_xx_correlator',
    'renyi2_swap',
    'renyi2_exact',
    'swap_expectation_exact',
    'mutual_information_rbm',
    'forward_noise',
]
