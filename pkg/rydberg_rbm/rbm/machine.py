"""
Restricted Boltzmann machine wavefunction

The machine defines p(sigma) = exp(E_eff(sigma)) / Z with the effective energy

    E_eff(sigma) = b . sigma + sum_j log(1 + exp(W_j . sigma + c_j))

over binary visible units sigma in {0,1}^N (1 = Rydberg) and binary hidden
units. The wavefunction is psi(sigma) = sqrt(p(sigma)).
"""

import json
import logging
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
import torch
import torch.nn as nn

from rydberg_rbm.bits import all_configurations
from rydberg_rbm.dataset import Dataset
from rydberg_rbm.quantum.states import QuantumState
from rydberg_rbm.settings import require_enum_sites

logger = logging.getLogger(__name__)

DTYPE = torch.float64
CHECKPOINT_FORMAT = "rydberg-rbm/1"

# Configurations evaluated per chunk during exact enumeration
_ENUM_CHUNK = 2**14

ArrayLike = Union[np.ndarray, torch.Tensor]


def stable_softplus(x: torch.Tensor) -> torch.Tensor:
    """log(1 + e^x) as max(0, x) + log(1 + e^-|x|)"""
    return torch.clamp(x, min=0.0) + torch.log1p(torch.exp(-torch.abs(x)))


class RBM(nn.Module):
    """
    Binary-binary RBM with parameters W (N_h x N), b (N) and c (N_h)

    Args:
        n_visible: Number of visible units N
        n_hidden: Number of hidden units N_h
        init_std: Standard deviation of the Gaussian weight init (biases start at 0)
        generator: torch.Generator for the init; a fresh unseeded one if None
    """

    def __init__(self, n_visible: int, n_hidden: int, init_std: float = 0.01,
                 generator: Optional[torch.Generator] = None):
        super().__init__()
        if n_visible < 1 or n_hidden < 1:
            raise ValueError(f"RBM needs n_visible, n_hidden >= 1, got {n_visible}, {n_hidden}")
        self.n_visible = int(n_visible)
        self.n_hidden = int(n_hidden)
        self.weights = nn.Parameter(torch.zeros(n_hidden, n_visible, dtype=DTYPE))
        self.visible_bias = nn.Parameter(torch.zeros(n_visible, dtype=DTYPE))
        self.hidden_bias = nn.Parameter(torch.zeros(n_hidden, dtype=DTYPE))
        if init_std > 0:
            with torch.no_grad():
                self.weights.normal_(0.0, init_std, generator=generator)

    @property
    def n_sites(self) -> int:
        return self.n_visible

    @classmethod
    def from_arrays(cls, weights, visible_bias, hidden_bias) -> "RBM":
        weights = np.asarray(weights, dtype=np.float64)
        visible_bias = np.asarray(visible_bias, dtype=np.float64)
        hidden_bias = np.asarray(hidden_bias, dtype=np.float64)
        if weights.ndim != 2 or weights.shape != (hidden_bias.size, visible_bias.size):
            raise ValueError(
                f"Inconsistent RBM shapes: W {weights.shape}, b {visible_bias.shape}, c {hidden_bias.shape}"
            )
        machine = cls(visible_bias.size, hidden_bias.size, init_std=0.0)
        machine.load_arrays({"weights": weights, "visible_bias": visible_bias,
                             "hidden_bias": hidden_bias})
        return machine

    def arrays(self) -> Dict[str, np.ndarray]:
        """Detached numpy copies of the parameters"""
        return {name: p.detach().cpu().numpy().copy() for name, p in self.named_parameters()}

    @torch.no_grad()
    def load_arrays(self, arrays: Dict[str, np.ndarray]) -> None:
        for name, p in self.named_parameters():
            value = torch.as_tensor(np.asarray(arrays[name]), dtype=DTYPE)
            if value.shape != p.shape:
                raise ValueError(f"{name} has shape {tuple(value.shape)}, expected {tuple(p.shape)}")
            if not torch.isfinite(value).all():
                raise ValueError(f"{name} contains non-finite entries")
            p.copy_(value)

    def num_parameters(self) -> int:
        return self.n_visible * self.n_hidden + self.n_visible + self.n_hidden

    def is_finite(self) -> bool:
        return all(bool(torch.isfinite(p).all()) for p in self.parameters())

    def _as_tensor(self, bits: ArrayLike) -> torch.Tensor:
        if isinstance(bits, Dataset):
            bits = bits.bits
        if isinstance(bits, np.ndarray):
            bits = torch.from_numpy(np.ascontiguousarray(bits))
        bits = bits.to(DTYPE)
        if bits.shape[-1] != self.n_visible:
            raise ValueError(f"Expected {self.n_visible} visible bits, got shape {tuple(bits.shape)}")
        return bits

    def effective_energy(self, visible: ArrayLike) -> torch.Tensor:
        """E_eff for one configuration (shape (N,)) or a batch (shape (B, N))"""
        v = self._as_tensor(visible)
        return v @ self.visible_bias + stable_softplus(v @ self.weights.T + self.hidden_bias).sum(-1)

    def forward(self, visible: ArrayLike) -> torch.Tensor:
        return self.effective_energy(visible)

    @torch.no_grad()
    def log_psi(self, bits: np.ndarray) -> np.ndarray:
        """Unnormalized log-amplitude E_eff / 2 as numpy"""
        return 0.5 * self.effective_energy(bits).numpy()

    def log_partition(self) -> torch.Tensor:
        """
        log Z by enumerating all 2^N visible configurations (differentiable)

        Raises:
            ResourceLimitError: if N exceeds the enumeration cap
        """
        require_enum_sites(self.n_visible, "RBM partition function")
        configs = torch.from_numpy(all_configurations(self.n_visible))
        running = None
        for start in range(0, configs.shape[0], _ENUM_CHUNK):
            chunk = torch.logsumexp(self.effective_energy(configs[start:start + _ENUM_CHUNK]), dim=0)
            running = chunk if running is None else torch.logaddexp(running, chunk)
        return running

    def log_probability_table(self) -> torch.Tensor:
        """log p(sigma) for every configuration in basis order (differentiable)"""
        require_enum_sites(self.n_visible, "RBM probability table")
        configs = torch.from_numpy(all_configurations(self.n_visible))
        return self.effective_energy(configs) - self.log_partition()

    @torch.no_grad()
    def log_partition_exact(self) -> float:
        return float(self.log_partition())

    @torch.no_grad()
    def probability_table(self) -> np.ndarray:
        return torch.exp(self.log_probability_table()).numpy()

    @torch.no_grad()
    def amplitude_table(self) -> np.ndarray:
        return np.sqrt(self.probability_table())

    @torch.no_grad()
    def probability_exact(self, bits: ArrayLike) -> np.ndarray:
        """p(sigma) for the given configuration(s)"""
        return torch.exp(self.effective_energy(bits) - self.log_partition()).numpy()

    @torch.no_grad()
    def amplitude(self, bits: ArrayLike) -> np.ndarray:
        return np.sqrt(self.probability_exact(bits))

    @torch.no_grad()
    def to_state(self) -> QuantumState:
        """The RBM wavefunction as a dense pure state"""
        amps = self.amplitude_table()
        return QuantumState(self.n_visible, amps / np.linalg.norm(amps))

    def conditional_hidden(self, visible: ArrayLike) -> torch.Tensor:
        """p(h_j = 1 | sigma) = sigmoid(W sigma + c)"""
        return torch.sigmoid(self._as_tensor(visible) @ self.weights.T + self.hidden_bias)

    def conditional_visible(self, hidden: ArrayLike) -> torch.Tensor:
        """p(sigma_i = 1 | h) = sigmoid(W^T h + b)"""
        h = torch.as_tensor(hidden, dtype=DTYPE)
        return torch.sigmoid(h @ self.weights + self.visible_bias)

    @torch.no_grad()
    def gibbs_steps(self, visible: torch.Tensor, k: int, generator: torch.Generator) -> torch.Tensor:
        """k block-Gibbs sweeps (hidden first, then visible) from the given visible states"""
        v = self._as_tensor(visible).clone()
        for _ in range(k):
            h = torch.bernoulli(self.conditional_hidden(v), generator=generator)
            v = torch.bernoulli(self.conditional_visible(h), generator=generator)
        return v

    @torch.no_grad()
    def gibbs_sample(self, n_chains: int, k: int, seed: int,
                     init: Optional[Union[Dataset, np.ndarray]] = None) -> np.ndarray:
        """
        Final visible states of independent k-step Gibbs chains

        Args:
            n_chains: Number of chains
            k: Sweeps per chain (>= 1)
            seed: Seed for the torch generator
            init: Dataset / bit array to seed chains from (rows drawn uniformly),
                  or None for uniformly random starts

        Returns:
            uint8 array of shape (n_chains, N)
        """
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        chain = GibbsChain(self, n_chains, seed, init)
        chain.step(k)
        return chain.visible_bits()

    @torch.no_grad()
    def sample(self, n_samples: int, seed: int, burn_in: int = 100, n_chains: Optional[int] = None,
               thin: int = 1) -> np.ndarray:
        """
        Monte Carlo samples of p(sigma)

        Runs n_chains parallel chains from random starts, discards burn_in
        sweeps, then collects one sample per chain every `thin` sweeps.
        Samples are ordered round by round.
        """
        if n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {n_samples}")
        n_chains = int(n_chains or min(n_samples, 1000))
        chain = GibbsChain(self, n_chains, seed)
        chain.step(burn_in)
        return chain.collect(n_samples, thin)

    def extra_repr(self) -> str:
        return f"n_visible={self.n_visible}, n_hidden={self.n_hidden}"

    def to_dict(self, config_hash: Optional[str] = None, seed: Optional[int] = None) -> Dict:
        arrays = self.arrays()
        return {
            "format": CHECKPOINT_FORMAT,
            "n_visible": self.n_visible,
            "n_hidden": self.n_hidden,
            "weights": [float(x) for x in arrays["weights"].ravel()],
            "visible_bias": [float(x) for x in arrays["visible_bias"]],
            "hidden_bias": [float(x) for x in arrays["hidden_bias"]],
            "config_hash": config_hash,
            "seed": seed,
        }

    @classmethod
    def from_dict(cls, payload: Dict) -> "RBM":
        n_v, n_h = int(payload["n_visible"]), int(payload["n_hidden"])
        weights = np.asarray(payload["weights"], dtype=np.float64)
        if weights.size != n_v * n_h:
            raise ValueError(f"Checkpoint has {weights.size} weights, expected {n_v * n_h}")
        return cls.from_arrays(weights.reshape(n_h, n_v), payload["visible_bias"], payload["hidden_bias"])

    def save(self, path: Union[str, Path], config_hash: Optional[str] = None,
             seed: Optional[int] = None) -> None:
        """Write a JSON checkpoint (shortest round-trip float repr, bit-exact on reload)"""
        Path(path).write_text(json.dumps(self.to_dict(config_hash, seed), indent=1))
        logger.debug(f"Saved RBM checkpoint to {path}")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RBM":
        payload = json.loads(Path(path).read_text())
        if payload.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"{path} is not an RBM checkpoint (format={payload.get('format')!r})")
        return cls.from_dict(payload)


class GibbsChain:
    """
    A batch of block-Gibbs chains over one machine

    Attributes:
        machine: The RBM being sampled (not modified)
        visible: Current visible states, shape (n_chains, N)
        generator: torch.Generator holding the chain's random state
        steps_taken: Number of sweeps performed so far
    """

    def __init__(self, machine: RBM, n_chains: int, seed: int,
                 init: Optional[Union[Dataset, np.ndarray]] = None):
        if n_chains < 1:
            raise ValueError(f"n_chains must be >= 1, got {n_chains}")
        self.machine = machine
        self.generator = torch.Generator().manual_seed(int(seed))
        self.steps_taken = 0
        if init is None:
            probs = torch.full((n_chains, machine.n_visible), 0.5, dtype=DTYPE)
            self.visible = torch.bernoulli(probs, generator=self.generator)
        else:
            data = init.bits if isinstance(init, Dataset) else np.asarray(init)
            if data.shape[0] == 0:
                raise ValueError("Cannot seed Gibbs chains from an empty dataset")
            rows = torch.randint(data.shape[0], (n_chains,), generator=self.generator)
            self.visible = machine._as_tensor(data)[rows].clone()

    def step(self, k: int = 1) -> torch.Tensor:
        self.visible = self.machine.gibbs_steps(self.visible, k, self.generator)
        self.steps_taken += k
        return self.visible

    def visible_bits(self) -> np.ndarray:
        return self.visible.numpy().astype(np.uint8)

    def collect(self, n_samples: int, thin: int = 1) -> np.ndarray:
        rounds = []
        collected = 0
        while collected < n_samples:
            self.step(thin)
            rounds.append(self.visible_bits())
            collected += rounds[-1].shape[0]
        return np.concatenate(rounds)[:n_samples]
