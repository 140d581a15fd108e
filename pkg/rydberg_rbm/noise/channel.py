"""
Factorized bit-flip measurement channel

A record tau is produced from the true configuration sigma site by site with

    p(1|0) = p10,  p(0|0) = 1 - p10,  p(0|1) = p01,  p(1|1) = 1 - p01

The same channel defines the noise layer of the three-layer model.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
import torch

from rydberg_rbm.dataset import Dataset
from rydberg_rbm.exceptions import SingularityError
from rydberg_rbm.settings import require_pure_sites

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NoiseModel:
    """
    Bit-flip rates

    Attributes:
        p10: Probability of recording 1 when the site is 0
        p01: Probability of recording 0 when the site is 1
        p10_sites: Optional per-site override of p10
        p01_sites: Optional per-site override of p01
    """
    p10: float = 0.0
    p01: float = 0.0
    p10_sites: Optional[Tuple[float, ...]] = None
    p01_sites: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        for name in ("p10_sites", "p01_sites"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, tuple(float(x) for x in value))
        values = [self.p10, self.p01] + list(self.p10_sites or ()) + list(self.p01_sites or ())
        for rate in values:
            if not 0.0 <= rate < 0.5:
                raise ValueError(f"Flip rates must lie in [0, 0.5), got {rate}")
        if self.p10_sites and self.p01_sites and len(self.p10_sites) != len(self.p01_sites):
            raise ValueError("Per-site rate vectors must have equal length")

    @classmethod
    def measured(cls) -> "NoiseModel":
        """Rates of the detection errors of the eight-atom experiment"""
        return cls(p10=0.01, p01=0.04)

    @property
    def is_trivial(self) -> bool:
        rates = [self.p10, self.p01] + list(self.p10_sites or ()) + list(self.p01_sites or ())
        return all(r == 0.0 for r in rates)

    def rates(self, n_sites: int) -> Tuple[np.ndarray, np.ndarray]:
        """Per-site (p10, p01) vectors of length n_sites"""
        p10 = np.full(n_sites, self.p10) if self.p10_sites is None else np.asarray(self.p10_sites)
        p01 = np.full(n_sites, self.p01) if self.p01_sites is None else np.asarray(self.p01_sites)
        if p10.shape != (n_sites,) or p01.shape != (n_sites,):
            raise ValueError(f"Per-site rates do not match N={n_sites}")
        return p10, p01

    def single_site_matrix(self, site: Optional[int] = None, n_sites: Optional[int] = None) -> np.ndarray:
        """Column-stochastic T[tau, sigma] for one site"""
        if site is None:
            p10, p01 = self.p10, self.p01
        else:
            p10_v, p01_v = self.rates(n_sites if n_sites is not None else site + 1)
            p10, p01 = p10_v[site], p01_v[site]
        return np.array([[1.0 - p10, p01],
                         [p10, 1.0 - p01]])

    def to_dict(self) -> Dict:
        out = {"p10": self.p10, "p01": self.p01}
        if self.p10_sites is not None:
            out["p10_sites"] = list(self.p10_sites)
        if self.p01_sites is not None:
            out["p01_sites"] = list(self.p01_sites)
        return out

    @classmethod
    def from_dict(cls, payload: Optional[Dict]) -> Optional["NoiseModel"]:
        if payload is None:
            return None
        return cls(
            p10=float(payload.get("p10", 0.0)),
            p01=float(payload.get("p01", 0.0)),
            p10_sites=payload.get("p10_sites"),
            p01_sites=payload.get("p01_sites"),
        )


@dataclass(frozen=True)
class NoiseCouplings:
    """Noise-layer couplings: p(tau|sigma) = p(0|0) exp(w_tilde tau sigma + b_sigma sigma + b_tau tau)"""
    w_tilde: float
    b_sigma: float
    b_tau: float


def channel_prob(tau, sigma, nm: NoiseModel) -> float:
    """Probability of recording tau from the true configuration sigma"""
    tau = np.asarray(tau, dtype=np.int64)
    sigma = np.asarray(sigma, dtype=np.int64)
    if tau.shape != sigma.shape:
        raise ValueError(f"tau and sigma lengths differ: {tau.shape} vs {sigma.shape}")
    p10, p01 = nm.rates(sigma.shape[-1])
    flip_prob = np.where(sigma == 1, p01, p10)
    factors = np.where(tau == sigma, 1.0 - flip_prob, flip_prob)
    return float(np.prod(factors))


def corrupt_dataset(d: Dataset, nm: NoiseModel, seed: int) -> Dataset:
    """Flip every bit independently with its rate; records nm and seed in the metadata"""
    rng = np.random.default_rng(seed)
    p10, p01 = nm.rates(d.n_sites)
    u = rng.random(d.bits.shape)
    flips = np.where(d.bits == 1, u < p01, u < p10)
    logger.debug(f"Corrupted {d.n_samples} records: {int(flips.sum())} flipped bits (seed={seed})")
    return d.with_bits(
        (d.bits ^ flips).astype(np.uint8),
        noise=nm.to_dict(),
        noise_seed=seed,
        source=f"{d.source} + bit-flip channel" if d.source else "bit-flip channel",
    )


def apply_channel(table, nm: NoiseModel, n_sites: int):
    """
    Push a probability table over sigma through the channel

    Works on numpy arrays and (differentiable) torch tensors alike.
    """
    p10, p01 = nm.rates(n_sites)
    is_torch = isinstance(table, torch.Tensor)
    t = table.reshape([2] * n_sites)
    for site in range(n_sites):
        T = np.array([[1.0 - p10[site], p01[site]], [p10[site], 1.0 - p01[site]]])
        if is_torch:
            t = torch.movedim(torch.tensordot(torch.as_tensor(T, dtype=table.dtype), t,
                                              dims=([1], [site])), 0, site)
        else:
            t = np.moveaxis(np.tensordot(T, t, axes=([1], [site])), 0, site)
    return t.reshape(-1)


def corrupted_distribution_exact(machine, nm: NoiseModel) -> np.ndarray:
    """
    p~(tau) = sum_sigma p(tau|sigma) p(sigma) over all 2^N records

    Args:
        machine: RBM (or any object with n_sites and probability_table())
        nm: Channel
    """
    require_pure_sites(machine.n_sites, "corrupted distribution")
    probs = machine.probability_table()
    if nm.is_trivial:
        return probs
    return apply_channel(probs, nm, machine.n_sites)


def clamped_visible_conditional(machine, nm: NoiseModel, tau, hidden) -> torch.Tensor:
    """
    p(sigma_j = 1 | tau, h) of the three-layer model

    Bayes posterior p(tau_j|1) q_j / (p(tau_j|1) q_j + p(tau_j|0) (1 - q_j))
    with q = p(sigma = 1 | h). For a noiseless channel the posterior is the
    record itself, also where q saturates at 0 or 1.
    """
    q = machine.conditional_visible(hidden)
    tau = torch.as_tensor(tau, dtype=q.dtype)
    if nm.is_trivial:
        return tau.expand_as(q).clone()
    p10, p01 = (torch.as_tensor(r, dtype=q.dtype) for r in nm.rates(machine.n_sites))
    like_one = torch.where(tau == 1, 1.0 - p01, p01)
    like_zero = torch.where(tau == 1, p10, 1.0 - p10)
    numer = like_one * q
    denom = numer + like_zero * (1.0 - q)
    # denom vanishes only when a zero rate rules out the alternative to tau
    return torch.where(denom > 0, numer / torch.where(denom > 0, denom, torch.ones_like(denom)), tau)


@torch.no_grad()
def clamped_gibbs(machine, nm: NoiseModel, records: torch.Tensor, k: int,
                  generator: torch.Generator) -> torch.Tensor:
    """k sweeps of the chain sampling p(sigma, h | tau), started at sigma = tau"""
    sigma = records.clone()
    for _ in range(k):
        h = torch.bernoulli(machine.conditional_hidden(sigma), generator=generator)
        sigma = torch.bernoulli(clamped_visible_conditional(machine, nm, records, h), generator=generator)
    return sigma


def effective_couplings(nm: NoiseModel, site: Optional[int] = None,
                        n_sites: Optional[int] = None) -> NoiseCouplings:
    """
    Couplings of the noise layer

        W~ = log[p(1|1) p(0|0) / (p(1|0) p(0|1))],  b~_sigma = log[p(0|1)/p(0|0)],
        b~_tau = log[p(1|0)/p(0|0)]

    Raises:
        SingularityError: if a rate is zero (noiseless channels bypass the layer)
    """
    T = nm.single_site_matrix(site, n_sites)
    p00, p01 = T[0, 0], T[0, 1]
    p10, p11 = T[1, 0], T[1, 1]
    if min(p00, p01, p10, p11) <= 0.0:
        raise SingularityError("Noise-layer couplings are infinite for a zero flip rate")
    return NoiseCouplings(
        w_tilde=math.log(p11 * p00 / (p10 * p01)),
        b_sigma=math.log(p01 / p00),
        b_tau=math.log(p10 / p00),
    )


def channel_prob_from_couplings(tau: int, sigma: int, couplings: NoiseCouplings) -> float:
    """Single-site p(tau|sigma) rebuilt from the noise-layer couplings"""
    p00 = 1.0 / (1.0 + math.exp(couplings.b_tau))
    return p00 * math.exp(couplings.w_tilde * tau * sigma + couplings.b_sigma * sigma
                          + couplings.b_tau * tau)
