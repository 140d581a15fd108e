"""
Frequency-distribution baseline

The FD model memorizes the dataset as a lookup table from observed
bit-string to count and defines the positive state
|Psi> = sum_tau sqrt(P_FD(tau)) |tau>. Unseen strings have probability zero.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from rydberg_rbm.bits import bits_to_index, bits_to_string, index_to_bits
from rydberg_rbm.dataset import Dataset
from rydberg_rbm.quantum.states import QuantumState, positive_pure_partner
from rydberg_rbm.settings import require_enum_sites

logger = logging.getLogger(__name__)

NORMALIZATION_TOLERANCE = 1e-8


@dataclass(frozen=True)
class FdModel:
    """
    Empirical lookup table

    Attributes:
        n_sites: Chain length N
        indices: Sorted basis indices of the observed strings
        counts: Count of each observed string (all >= 1)
    """
    n_sites: int
    indices: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        if self.indices.shape != self.counts.shape or np.any(self.counts < 1):
            raise ValueError("FdModel needs one positive count per observed string")

    @property
    def n_samples(self) -> int:
        return int(self.counts.sum())

    @property
    def table(self) -> dict:
        """{bit-string: count}"""
        bits = index_to_bits(self.indices, self.n_sites)
        return {bits_to_string(row): int(c) for row, c in zip(bits, self.counts)}

    def probability(self, bits) -> np.ndarray:
        """P_FD of each configuration (0 when unseen)"""
        idx = np.atleast_1d(bits_to_index(bits))
        pos = np.searchsorted(self.indices, idx)
        pos = np.clip(pos, 0, len(self.indices) - 1)
        hit = self.indices[pos] == idx
        return np.where(hit, self.counts[pos] / self.n_samples, 0.0)

    def probability_table(self) -> np.ndarray:
        require_enum_sites(self.n_sites, "FD probability table")
        table = np.zeros(2**self.n_sites)
        table[self.indices] = self.counts / self.n_samples
        return table

    def amplitude_table(self) -> np.ndarray:
        return np.sqrt(self.probability_table())

    def log_psi(self, bits) -> np.ndarray:
        """log sqrt(P_FD); -inf for unseen strings"""
        with np.errstate(divide="ignore"):
            return 0.5 * np.log(self.probability(bits))

    def sample(self, n_samples: int, seed: int) -> np.ndarray:
        """Independent draws from P_FD as a uint8 (n, N) array"""
        if n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {n_samples}")
        rng = np.random.default_rng(seed)
        drawn = rng.choice(self.indices, size=n_samples, p=self.counts / self.n_samples)
        return index_to_bits(drawn, self.n_sites)

    def to_state(self) -> QuantumState:
        return QuantumState(self.n_sites, self.amplitude_table())

    def to_frame(self) -> pd.DataFrame:
        bits = index_to_bits(self.indices, self.n_sites)
        return pd.DataFrame({"bitstring": [bits_to_string(r) for r in bits], "count": self.counts})

    def to_csv(self, path: Union[str, Path]) -> None:
        """Rows (bitstring, count) sorted by bit-string"""
        self.to_frame().sort_values("bitstring").to_csv(path, index=False)


def build_fd(d: Dataset) -> FdModel:
    """Lookup table of exact empirical counts"""
    if d.is_empty():
        raise ValueError("Cannot build a frequency model from an empty dataset")
    indices, counts = np.unique(d.indices(), return_counts=True)
    logger.debug(f"FD model: {indices.size} distinct strings from {d.n_samples} samples")
    return FdModel(d.n_sites, indices.astype(np.int64), counts.astype(np.int64))


def _check_normalized(p: np.ndarray, name: str) -> None:
    if np.any(p < 0) or abs(p.sum() - 1.0) > NORMALIZATION_TOLERANCE:
        raise ValueError(f"{name} is not a normalized probability table (sum={p.sum()})")


def classical_fidelity(p, q) -> float:
    """sum_tau sqrt(p(tau) q(tau))"""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"Tables differ in shape: {p.shape} vs {q.shape}")
    _check_normalized(p, "p")
    _check_normalized(q, "q")
    return float(np.clip(np.sum(np.sqrt(p * q)), 0.0, 1.0))


def fd_state_fidelity(fd: FdModel, truth: QuantumState) -> float:
    """
    Fidelity of the FD state to a positive truth

    Mixed truths are replaced by their positive-pure partner.

    Raises:
        ValueError: for a pure truth with negative or complex amplitudes
    """
    if truth.n_sites != fd.n_sites:
        raise ValueError(f"FD model has N={fd.n_sites}, truth has N={truth.n_sites}")
    if truth.is_pure:
        amps = truth.data
        if np.any(np.abs(amps.imag) > 1e-10) or np.any(amps.real < -1e-10):
            raise ValueError("FD fidelity needs a truth with nonnegative real amplitudes")
    else:
        logger.info("Mixed truth: FD fidelity uses its positive-pure partner")
        truth = positive_pure_partner(truth)
    return classical_fidelity(fd.probability_table(), truth.probabilities())


def fidelity_bound(n_samples: int, h2: float) -> float:
    """
    Upper bound sqrt(N_s) exp(-H2 / 4) on the FD fidelity

    Args:
        n_samples: Dataset size N_s
        h2: Renyi-2 entropy -log sum p^2 of the true distribution (nats)
    """
    if h2 < 0:
        raise ValueError(f"Renyi-2 entropy must be >= 0, got {h2}")
    return float(np.sqrt(n_samples) * np.exp(-h2 / 4.0))


def distribution_renyi2(p) -> float:
    """H2 = -log sum p^2"""
    p = np.asarray(p, dtype=np.float64)
    _check_normalized(p, "p")
    return float(max(-np.log(np.sum(p**2)), 0.0))


def model_size(model) -> int:
    """Distinct strings for an FD model, N N_h + N + N_h for an RBM"""
    if isinstance(model, FdModel):
        return int(model.indices.size)
    return int(model.num_parameters())
