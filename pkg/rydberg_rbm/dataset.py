"""
Measurement datasets

A Dataset is an ordered multiset of length-N bit-strings plus the metadata
needed to trace where it came from.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from rydberg_rbm.bits import bits_to_index, bits_to_string, strings_to_bits
from rydberg_rbm.settings import require_enum_sites

logger = logging.getLogger(__name__)


@dataclass
class Dataset:
    """
    Measurement records

    Attributes:
        bits: uint8 array of shape (n_samples, n_sites)
        seed: Seed used to draw the samples
        source: Free-text description of the generating state
        sweep_time: Sweep time in microseconds, if drawn from a sweep
        noise: Noise model as {"p10": ..., "p01": ...} if corrupted
        noise_seed: Seed used for the corruption
        config_hash: Hash of the experiment configuration
        extra: Any further metadata
    """
    bits: np.ndarray
    seed: Optional[int] = None
    source: str = ""
    sweep_time: Optional[float] = None
    noise: Optional[Dict[str, float]] = None
    noise_seed: Optional[int] = None
    config_hash: Optional[str] = None
    extra: Dict = field(default_factory=dict)

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2:
            raise ValueError(f"Dataset bits must be 2-D (n_samples, n_sites), got shape {bits.shape}")
        if bits.size and not np.isin(bits, (0, 1)).all():
            raise ValueError("Dataset bits must be 0 or 1")
        self.bits = np.ascontiguousarray(bits, dtype=np.uint8)

    @classmethod
    def from_strings(cls, lines: Iterable[str], **metadata) -> "Dataset":
        return cls(strings_to_bits(lines), **metadata)

    @property
    def n_samples(self) -> int:
        return int(self.bits.shape[0])

    @property
    def n_sites(self) -> int:
        return int(self.bits.shape[1])

    def __len__(self) -> int:
        return self.n_samples

    def is_empty(self) -> bool:
        return self.n_samples == 0

    def strings(self):
        return [bits_to_string(row) for row in self.bits]

    def indices(self) -> np.ndarray:
        """Basis index of every sample"""
        return bits_to_index(self.bits)

    def frequencies(self) -> np.ndarray:
        """Empirical probability table over all 2^N configurations"""
        require_enum_sites(self.n_sites, "dataset frequency table")
        counts = np.bincount(self.indices(), minlength=2**self.n_sites)
        return counts / max(self.n_samples, 1)

    def with_bits(self, bits: np.ndarray, **changes) -> "Dataset":
        """Copy with new records and updated metadata"""
        return replace(self, bits=bits, **changes)

    def subset(self, rows: np.ndarray) -> "Dataset":
        return replace(self, bits=self.bits[rows], extra=dict(self.extra))

    def split(self, fraction: float, seed: int) -> Tuple["Dataset", Optional["Dataset"]]:
        """
        Random train/validation split

        Args:
            fraction: Share of samples held out, in [0, 1)
            seed: Seed for the permutation

        Returns:
            (train, validation); validation is None when nothing is held out
        """
        if not 0.0 <= fraction < 1.0:
            raise ValueError(f"validation fraction must be in [0, 1), got {fraction}")
        n_val = int(round(fraction * self.n_samples))
        if n_val == 0 or n_val >= self.n_samples:
            return self, None
        perm = np.random.default_rng(seed).permutation(self.n_samples)
        return self.subset(np.sort(perm[n_val:])), self.subset(np.sort(perm[:n_val]))

    def metadata(self) -> Dict:
        """JSON-ready metadata (no records)"""
        return {
            "n_sites": self.n_sites,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "source": self.source,
            "sweep_time": self.sweep_time,
            "noise": self.noise,
            "noise_seed": self.noise_seed,
            "config_hash": self.config_hash,
            "extra": self.extra,
        }
