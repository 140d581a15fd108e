"""
Training module for rydberg_rbm
"""

from rydberg_rbm.training.trainer import (
    TrainConfig,
    TrainReport,
    RbmTrainer,
    nll_exact,
    grad_exact,
    cd_gradient,
    train,
    train_resplits,
    snapshot_spread,
)

__all__ = [
    'TrainConfig',
    'TrainReport',
    'RbmTrainer',
    'nll_exact',
    'grad_exact',
    'cd_gradient',
    'train',
    'train_resplits',
    'snapshot_spread',
]
