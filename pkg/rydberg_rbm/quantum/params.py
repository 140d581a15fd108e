"""
Parameter types for the Rydberg chain

Frequencies are in MHz, times in microseconds and rates in 1/us.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HamiltonianParams:
    """
    Couplings of the Rydberg chain Hamiltonian

    Attributes:
        n_sites: Number of atoms N (>= 2)
        v_nn: Nearest-neighbour interaction in MHz (> 0)
        omega: Rabi frequency in MHz
        delta: Detuning in MHz
        interaction_cutoff: Largest |i - j| with nonzero coupling (default N - 1)
    """
    n_sites: int
    v_nn: float
    omega: float
    delta: float
    interaction_cutoff: Optional[int] = None

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise ValueError(f"n_sites must be an integer >= 2, got {self.n_sites}")
        if not self.v_nn > 0:
            raise ValueError(f"v_nn must be > 0, got {self.v_nn}")
        if self.interaction_cutoff is None:
            object.__setattr__(self, "interaction_cutoff", self.n_sites - 1)
        if self.interaction_cutoff < 1:
            raise ValueError(f"interaction_cutoff must be >= 1, got {self.interaction_cutoff}")

    def with_drive(self, omega: float, delta: float) -> "HamiltonianParams":
        return replace(self, omega=float(omega), delta=float(delta))


@dataclass(frozen=True)
class SweepProfile:
    """
    Piecewise-linear drive Omega(t), Delta(t) on [0, total_time]

    Attributes:
        total_time: Sweep duration T_ev in microseconds
        times: Knot times, starting at 0 and ending at total_time
        omegas: Rabi frequency at each knot (MHz)
        deltas: Detuning at each knot (MHz)
        checkpoints: Sorted times at which states are emitted
    """
    total_time: float
    times: Tuple[float, ...]
    omegas: Tuple[float, ...]
    deltas: Tuple[float, ...]
    checkpoints: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for name in ("times", "omegas", "deltas", "checkpoints"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))
        if not self.total_time > 0:
            raise ValueError(f"total_time must be > 0, got {self.total_time}")
        if not (len(self.times) == len(self.omegas) == len(self.deltas)) or len(self.times) < 2:
            raise ValueError("times, omegas and deltas need equal length >= 2")
        t = np.asarray(self.times)
        if abs(t[0]) > 1e-12 or abs(t[-1] - self.total_time) > 1e-12:
            raise ValueError("knot times must start at 0 and end at total_time")
        if np.any(np.diff(t) <= 0):
            raise ValueError("knot times must be strictly increasing")
        c = np.asarray(self.checkpoints)
        if c.size and (np.any(np.diff(c) < 0) or c[0] < 0 or c[-1] > self.total_time + 1e-12):
            raise ValueError("checkpoints must be sorted and within [0, total_time]")

    @classmethod
    def default(cls, total_time: float = 3.4, omega_max: float = 2.0,
                delta_start: float = -10.0, delta_end: float = 10.0,
                ramp_fraction: float = 0.1, n_checkpoints: int = 15) -> "SweepProfile":
        """
        Linear detuning sweep under a trapezoidal Rabi pulse

        Checkpoints are t_k = k * T / n_checkpoints for k = 1..n_checkpoints.
        """
        if not 0 < ramp_fraction < 0.5:
            raise ValueError(f"ramp_fraction must be in (0, 0.5), got {ramp_fraction}")
        times = np.array([0.0, ramp_fraction, 1.0 - ramp_fraction, 1.0]) * total_time
        deltas = delta_start + (delta_end - delta_start) * times / total_time
        omegas = [0.0, omega_max, omega_max, 0.0]
        checkpoints = [total_time * k / n_checkpoints for k in range(1, n_checkpoints + 1)]
        return cls(total_time, tuple(times), tuple(omegas), tuple(deltas), tuple(checkpoints))

    @classmethod
    def from_points(cls, times: Sequence[float], omegas: Sequence[float],
                    deltas: Sequence[float], checkpoints: Sequence[float] = ()) -> "SweepProfile":
        return cls(float(times[-1]), tuple(times), tuple(omegas), tuple(deltas), tuple(checkpoints))

    def omega(self, t: float) -> float:
        return float(np.interp(t, self.times, self.omegas))

    def delta(self, t: float) -> float:
        return float(np.interp(t, self.times, self.deltas))

    @property
    def peak_omega(self) -> float:
        return float(max(self.omegas))


@dataclass(frozen=True)
class LindbladParams:
    """
    Decoherence model

    Attributes:
        gamma_rg: Decay rate |r> -> |g> in 1/us
        gamma_gg: Dephasing rate of |g> in 1/us
        doppler_rms: rms of the Gaussian per-site detuning shifts, MHz
        n_disorder: Number of disorder realizations to average
    """
    gamma_rg: float = 1.0 / 80.0
    gamma_gg: float = 1.0 / 40.0
    doppler_rms: float = 0.0435
    n_disorder: int = 100

    def __post_init__(self):
        if self.gamma_rg < 0 or self.gamma_gg < 0 or self.doppler_rms < 0:
            raise ValueError("decoherence rates and doppler_rms must be >= 0")
        if int(self.n_disorder) != self.n_disorder or self.n_disorder < 1:
            raise ValueError(f"n_disorder must be an integer >= 1, got {self.n_disorder}")

    def scaled(self, alpha: float) -> "LindbladParams":
        """Both jump rates multiplied by alpha"""
        if alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {alpha}")
        return replace(self, gamma_rg=self.gamma_rg * alpha, gamma_gg=self.gamma_gg * alpha)

    @property
    def is_coherent(self) -> bool:
        return self.gamma_rg == 0 and self.gamma_gg == 0
