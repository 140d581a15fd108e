"""
Projective measurements in the occupation basis
"""

import logging
from typing import Optional

import numpy as np

from rydberg_rbm.bits import index_to_bits
from rydberg_rbm.dataset import Dataset
from rydberg_rbm.quantum.states import QuantumState

logger = logging.getLogger(__name__)


def sample_measurements(
    state: QuantumState,
    n_samples: int,
    seed: int,
    source: Optional[str] = None,
    sweep_time: Optional[float] = None,
) -> Dataset:
    """
    Draw i.i.d. bit-strings from the state's occupation distribution

    Args:
        state: Pure or mixed state
        n_samples: Number of records (>= 1)
        seed: Seed for numpy's default generator
        source: Description stored in the dataset metadata
        sweep_time: Sweep time stored in the dataset metadata

    Returns:
        Dataset with n_samples rows
    """
    if int(n_samples) != n_samples or n_samples < 1:
        raise ValueError(f"n_samples must be a positive integer, got {n_samples}")
    probs = state.probabilities()
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    idx = rng.choice(state.dim, size=int(n_samples), p=probs)
    logger.debug(f"Sampled {n_samples} measurements from {state!r} (seed={seed})")
    return Dataset(
        index_to_bits(idx, state.n_sites),
        seed=seed,
        source=source or f"{state.kind} state, N={state.n_sites}",
        sweep_time=sweep_time,
    )
