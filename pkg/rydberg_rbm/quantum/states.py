"""
Dense quantum states and the quantities computed from them

Pure states are stored as 2^N vectors, mixed states as 2^N x 2^N density
matrices, both in the occupation basis with site 0 as the most significant bit.
"""

import logging
from typing import Iterable, List, Sequence

import numpy as np

from rydberg_rbm.bits import configuration
from rydberg_rbm.settings import require_mixed_sites

logger = logging.getLogger(__name__)

# Eigenvalues below this are treated as exact zeros inside matrix square roots
_EIG_CUTOFF = 1e-13


class QuantumState:
    """
    Pure or mixed state of an N-site chain

    Args:
        n_sites: Number of sites N
        data: State vector (length 2^N) or density matrix (2^N x 2^N)
        check: Validate the state invariants
        atol: Tolerance for the norm / trace / Hermiticity checks
    """

    def __init__(self, n_sites: int, data: np.ndarray, check: bool = True, atol: float = 1e-10):
        data = np.asarray(data)
        dim = 2**n_sites
        if data.ndim == 1 and data.shape != (dim,):
            raise ValueError(f"Pure state for N={n_sites} needs length {dim}, got {data.shape}")
        if data.ndim == 2 and data.shape != (dim, dim):
            raise ValueError(f"Mixed state for N={n_sites} needs shape {(dim, dim)}, got {data.shape}")
        if data.ndim not in (1, 2):
            raise ValueError(f"State data must be 1-D or 2-D, got {data.ndim}-D")
        self.n_sites = int(n_sites)
        self.data = data
        if check:
            self.validate(atol)

    @classmethod
    def pure(cls, vector, **kwargs) -> "QuantumState":
        vector = np.asarray(vector)
        return cls(int(np.log2(vector.shape[0])), vector, **kwargs)

    @classmethod
    def mixed(cls, rho, **kwargs) -> "QuantumState":
        rho = np.asarray(rho)
        return cls(int(np.log2(rho.shape[0])), rho, **kwargs)

    @classmethod
    def basis(cls, n_sites: int, index: int) -> "QuantumState":
        vec = np.zeros(2**n_sites)
        vec[index] = 1.0
        return cls(n_sites, vec)

    @property
    def kind(self) -> str:
        return "pure" if self.data.ndim == 1 else "mixed"

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    @property
    def dim(self) -> int:
        return 2**self.n_sites

    def validate(self, atol: float = 1e-10) -> None:
        """Raise ValueError if the state invariants are violated"""
        if not np.all(np.isfinite(self.data)):
            raise ValueError("State contains non-finite entries")
        if self.is_pure:
            norm = np.linalg.norm(self.data)
            if abs(norm - 1.0) > atol:
                raise ValueError(f"Pure state norm is {norm:.12g}, expected 1")
            return
        rho = self.data
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm > atol:
            raise ValueError(f"Density matrix not Hermitian (max deviation {herm:.3g})")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > atol:
            raise ValueError(f"Density matrix trace is {tr:.12g}, expected 1")
        lowest = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
        if lowest < -max(atol, 1e-9):
            raise ValueError(f"Density matrix has negative eigenvalue {lowest:.3g}")

    def density_matrix(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def probabilities(self) -> np.ndarray:
        """Measurement distribution in the occupation basis"""
        if self.is_pure:
            return np.abs(self.data) ** 2
        return np.clip(np.real(np.diag(self.data)), 0.0, None)

    def to_json(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "kind": self.kind,
            "real": np.real(self.data).tolist(),
            "imag": np.imag(self.data).tolist(),
        }

    @classmethod
    def from_json(cls, payload: dict) -> "QuantumState":
        data = np.asarray(payload["real"], dtype=float)
        imag = np.asarray(payload["imag"], dtype=float)
        if np.any(imag):
            data = data + 1j * imag
        return cls(int(payload["n_sites"]), data, atol=1e-6)

    def __repr__(self) -> str:
        return f"QuantumState(n_sites={self.n_sites}, kind={self.kind})"


def _validate_sites(sites: Iterable[int], n_sites: int) -> List[int]:
    sites = sorted({int(s) for s in sites})
    if not sites:
        raise ValueError("Site subset must be nonempty")
    if sites[0] < 0 or sites[-1] >= n_sites:
        raise ValueError(f"Sites {sites} out of range for N={n_sites}")
    return sites


def _validate_bond(s: int, n_sites: int) -> None:
    if not 1 <= s <= n_sites - 1:
        raise ValueError(f"Bond must satisfy 1 <= s <= {n_sites - 1}, got {s}")


def partial_trace(state: QuantumState, keep: Iterable[int]) -> QuantumState:
    """
    Reduced density matrix on the kept sites

    Args:
        state: Pure or mixed state
        keep: Site indices to keep (0-based)

    Returns:
        Mixed QuantumState on len(keep) sites, sites in increasing order
    """
    n = state.n_sites
    keep = _validate_sites(keep, n)
    rest = [s for s in range(n) if s not in keep]
    dk, dr = 2 ** len(keep), 2 ** len(rest)

    if state.is_pure:
        psi = state.data.reshape([2] * n).transpose(keep + rest).reshape(dk, dr)
        rho = psi @ psi.conj().T
    else:
        order = keep + rest
        rho = state.data.reshape([2] * (2 * n))
        rho = rho.transpose(order + [n + s for s in order]).reshape(dk, dr, dk, dr)
        rho = np.einsum("arbr->ab", rho)
    return QuantumState(len(keep), rho, check=False)


def purity(state: QuantumState) -> float:
    """Tr rho^2"""
    if state.is_pure:
        return 1.0
    return float(np.sum(np.abs(state.data) ** 2))


def renyi_entropy(state: QuantumState, n: int) -> float:
    """
    Order-n Renyi entropy in nats

    Raises:
        ValueError: if n < 2
    """
    if int(n) != n or n < 2:
        raise ValueError(f"Renyi order must be an integer >= 2, got {n}")
    if state.is_pure:
        return 0.0
    rho = state.data
    if n == 2:
        moment = np.sum(np.abs(rho) ** 2)
    else:
        evals = np.clip(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)), 0.0, None)
        moment = np.sum(evals**n)
    return float(np.log(moment) / (1 - n))


def mutual_information_exact(state: QuantumState, cut_bond: int, n: int = 2) -> float:
    """S_n(A) + S_n(B) - S_n(AB) for A = [0, s), B = [s, N)"""
    _validate_bond(cut_bond, state.n_sites)
    a = partial_trace(state, range(cut_bond))
    b = partial_trace(state, range(cut_bond, state.n_sites))
    return renyi_entropy(a, n) + renyi_entropy(b, n) - renyi_entropy(state, n)


def _sqrt_psd(rho: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    evals = np.where(evals > _EIG_CUTOFF, evals, 0.0)
    return (evecs * np.sqrt(evals)) @ evecs.conj().T


def uhlmann_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Tr sqrt(sqrt(rho) sigma sqrt(rho)) for density matrices"""
    root = _sqrt_psd(rho)
    inner = root @ sigma @ root
    evals = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    evals = np.where(evals > _EIG_CUTOFF, evals, 0.0)
    return float(np.clip(np.sum(np.sqrt(evals)), 0.0, 1.0))


def fidelity(a: QuantumState, b: QuantumState) -> float:
    """
    Uhlmann fidelity (not squared)

    Pure/pure reduces to |<a|b>|, pure/mixed to sqrt(<psi|rho|psi>).
    """
    if a.n_sites != b.n_sites:
        raise ValueError(f"Fidelity needs equal sizes, got N={a.n_sites} and N={b.n_sites}")
    if a.is_pure and b.is_pure:
        return float(min(abs(np.vdot(a.data, b.data)), 1.0))
    if a.is_pure or b.is_pure:
        psi, rho = (a.data, b.data) if a.is_pure else (b.data, a.data)
        overlap = np.real(np.vdot(psi, rho @ psi))
        return float(np.sqrt(np.clip(overlap, 0.0, 1.0)))
    require_mixed_sites(a.n_sites, "Uhlmann fidelity")
    return uhlmann_fidelity(a.data, b.data)


def _windows(n_sites: int, s: int) -> List[range]:
    if not 1 <= s <= n_sites:
        raise ValueError(f"Window size must satisfy 1 <= s <= {n_sites}, got {s}")
    return [range(i, i + s) for i in range(n_sites - s + 1)]


def subsystem_avg_fidelity(a: QuantumState, b: QuantumState, s: int) -> float:
    """Mean fidelity of the reduced states on all N - s + 1 windows of s adjacent sites"""
    if a.n_sites != b.n_sites:
        raise ValueError(f"Fidelity needs equal sizes, got N={a.n_sites} and N={b.n_sites}")
    windows = _windows(a.n_sites, s)
    if s == a.n_sites:
        return fidelity(a, b)
    values = [fidelity(partial_trace(a, w), partial_trace(b, w)) for w in windows]
    return float(np.mean(values))


def subsystem_avg_renyi2(state: QuantumState, s: int) -> float:
    """Mean second Renyi entropy of the reduced states on all windows of s adjacent sites"""
    windows = _windows(state.n_sites, s)
    if s == state.n_sites:
        return renyi_entropy(state, 2)
    return float(np.mean([renyi_entropy(partial_trace(state, w), 2) for w in windows]))


def positive_pure_partner(state: QuantumState) -> QuantumState:
    """Pure state with amplitudes sqrt(<sigma|rho|sigma>)"""
    probs = state.probabilities()
    amps = np.sqrt(probs / probs.sum())
    return QuantumState(state.n_sites, amps)


def superposition(n_sites: int, terms: Sequence) -> QuantumState:
    """
    Pure state from (amplitude, configuration) pairs

    Configurations may be strings such as 'rgrg' or '1010'.
    """
    vec = np.zeros(2**n_sites)
    for amp, config in terms:
        idx = configuration(config) if isinstance(config, str) else int(config)
        vec[idx] += amp
    return QuantumState(n_sites, vec)


Z2_CONFIGURATIONS = ("rgrggrgr", "rggrgrgr", "rgrgrggr")


def approx_z2_state() -> QuantumState:
    """
    Perturbative eight-atom ordered state

    (1/sqrt 2)|rgrggrgr> + (1/2)|rggrgrgr> + (1/2)|rgrgrggr>
    """
    e1, e2, e3 = Z2_CONFIGURATIONS
    return superposition(8, [(1 / np.sqrt(2), e1), (0.5, e2), (0.5, e3)])
