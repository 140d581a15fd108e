"""
Noise module for rydberg_rbm

Bit-flip measurement channel and the clamped posterior of the noise layer.
"""

from rydberg_rbm.noise.channel import (
    NoiseModel,
    NoiseCouplings,
    channel_prob,
    corrupt_dataset,
    apply_channel,
    corrupted_distribution_exact,
    clamped_visible_conditional,
    clamped_gibbs,
    effective_couplings,
)

__all__ = [
    'NoiseModel',
    'NoiseCouplings',
    'channel_prob',
    'corrupt_dataset',
    'apply_channel',
    'corrupted_distribution_exact',
    'clamped_visible_conditional',
    'clamped_gibbs',
    'effective_couplings',
]
