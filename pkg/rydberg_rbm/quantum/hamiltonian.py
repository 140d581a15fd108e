"""
Rydberg chain Hamiltonian and exact ground states

    H = -Delta sum_i n_i - (Omega/2) sum_i X_i + sum_{i<j, |i-j|<=cutoff} V_nn/|i-j|^6 n_i n_j

Entries are in the units of the parameters (MHz); time evolution applies the
angular-frequency factor separately.
"""

import logging
import warnings
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from rydberg_rbm.bits import all_configurations
from rydberg_rbm.exceptions import DegenerateGroundStateWarning, SingularityError
from rydberg_rbm.quantum.params import HamiltonianParams
from rydberg_rbm.quantum.states import QuantumState
from rydberg_rbm.settings import require_pure_sites

logger = logging.getLogger(__name__)

DEGENERACY_GAP = 1e-9

# Largest dimension diagonalized in full; above it only the low end of the spectrum
_FULL_EIGH_DIM = 4096
_PARTIAL_EIGH_COUNT = 64


def interaction_energies(params: HamiltonianParams) -> np.ndarray:
    """Van der Waals energy of every configuration"""
    n = params.n_sites
    occ = all_configurations(n).astype(np.float64)
    energies = np.zeros(2**n)
    for dist in range(1, min(params.interaction_cutoff, n - 1) + 1):
        energies += params.v_nn / dist**6 * np.sum(occ[:, :-dist] * occ[:, dist:], axis=1)
    return energies


def excitation_numbers(n_sites: int) -> np.ndarray:
    """Number of Rydberg excitations in every configuration"""
    return all_configurations(n_sites).sum(axis=1).astype(np.float64)


def diagonal_energies(params: HamiltonianParams, disorder: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Diagonal of H in the occupation basis

    Args:
        params: Hamiltonian couplings
        disorder: Optional per-site shifts delta_i, adding -sum_i delta_i n_i
    """
    energies = interaction_energies(params) - params.delta * excitation_numbers(params.n_sites)
    if disorder is not None:
        disorder = np.asarray(disorder, dtype=np.float64)
        if disorder.shape != (params.n_sites,):
            raise ValueError(f"disorder must have shape ({params.n_sites},), got {disorder.shape}")
        energies = energies - all_configurations(params.n_sites) @ disorder
    return energies


def flip_masks(n_sites: int):
    """Basis-index XOR mask flipping each site, site 0 first"""
    return [1 << (n_sites - 1 - i) for i in range(n_sites)]


def build_hamiltonian(params: HamiltonianParams, disorder: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Dense real symmetric Hamiltonian

    Raises:
        ResourceLimitError: if 2^N x 2^N exceeds the configured cap or budget
    """
    require_pure_sites(params.n_sites, "Hamiltonian")
    dim = 2**params.n_sites
    H = np.diag(diagonal_energies(params, disorder))
    idx = np.arange(dim)
    for mask in flip_masks(params.n_sites):
        H[idx, idx ^ mask] += -0.5 * params.omega
    logger.debug(f"Built Hamiltonian N={params.n_sites} dim={dim} "
                 f"(V={params.v_nn}, Omega={params.omega}, Delta={params.delta})")
    return H


def _lowest_eigenpairs(H: np.ndarray):
    dim = H.shape[0]
    if dim <= _FULL_EIGH_DIM:
        return scipy.linalg.eigh(H)
    top = min(_PARTIAL_EIGH_COUNT, dim) - 1
    return scipy.linalg.eigh(H, subset_by_index=[0, top])


def ground_state(H: np.ndarray) -> QuantumState:
    """
    Lowest eigenvector with a positive dominant amplitude

    A degenerate ground space raises DegenerateGroundStateWarning and returns
    the normalized projection of the dominant configuration onto that space;
    ties between configurations go to the lexicographically smallest one.
    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"Hamiltonian must be square, got shape {H.shape}")
    if np.iscomplexobj(H) or np.max(np.abs(H - H.T)) > 1e-12:
        raise ValueError("ground_state expects a real symmetric matrix")
    n_sites = int(round(np.log2(H.shape[0])))
    if 2**n_sites != H.shape[0]:
        raise ValueError(f"Dimension {H.shape[0]} is not a power of two")

    evals, evecs = _lowest_eigenpairs(H)
    degenerate = np.flatnonzero(evals - evals[0] < DEGENERACY_GAP)
    if len(degenerate) > 1:
        space = evecs[:, degenerate]
        weights = np.sum(space**2, axis=1)
        dominant = int(np.flatnonzero(weights >= weights.max() - 1e-9)[0])
        vec = space @ space[dominant]
        vec /= np.linalg.norm(vec)
        message = (f"Ground space is {len(degenerate)}-fold degenerate "
                   f"(E0={evals[0]:.6g}); returning projection of configuration {dominant}")
        logger.warning(message)
        warnings.warn(message, DegenerateGroundStateWarning, stacklevel=2)
    else:
        vec = evecs[:, 0].copy()

    if vec[np.argmax(np.abs(vec))] < 0:
        vec = -vec
    return QuantumState(n_sites, vec, atol=1e-8)


def ground_energy(H: np.ndarray) -> float:
    return float(_lowest_eigenpairs(np.asarray(H))[0][0])


def build_sparse_hamiltonian(params: HamiltonianParams,
                             disorder: Optional[np.ndarray] = None) -> scipy.sparse.csr_matrix:
    """Same operator as build_hamiltonian in CSR form, without the dense 2^N x 2^N allocation"""
    require_pure_sites(params.n_sites, "sparse Hamiltonian")
    dim = 2**params.n_sites
    idx = np.arange(dim)
    masks = flip_masks(params.n_sites)
    rows = np.concatenate([idx] * (len(masks) + 1))
    cols = np.concatenate([idx] + [idx ^ m for m in masks])
    vals = np.concatenate([diagonal_energies(params, disorder)]
                          + [np.full(dim, -0.5 * params.omega)] * len(masks))
    return scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(dim, dim))


def sparse_ground_state(params: HamiltonianParams) -> QuantumState:
    """
    Ground state by Lanczos iteration for chains too long to diagonalize densely

    The start vector is the uniform superposition, so repeated calls agree.
    """
    H = build_sparse_hamiltonian(params)
    dim = H.shape[0]
    v0 = np.full(dim, 1.0 / np.sqrt(dim))
    evals, evecs = scipy.sparse.linalg.eigsh(H, k=2, which="SA", v0=v0, tol=1e-12)
    order = np.argsort(evals)
    if evals[order[1]] - evals[order[0]] < DEGENERACY_GAP:
        message = f"Lanczos ground space looks degenerate (E0={evals[order[0]]:.6g}); using the lowest vector"
        logger.warning(message)
        warnings.warn(message, DegenerateGroundStateWarning, stacklevel=2)
    vec = evecs[:, order[0]]
    vec = vec / np.linalg.norm(vec)
    if vec[np.argmax(np.abs(vec))] < 0:
        vec = -vec
    logger.debug(f"Lanczos ground state N={params.n_sites}, E0={evals[order[0]]:.8g}")
    return QuantumState(params.n_sites, vec, atol=1e-8)


def chain_ground_state(params: HamiltonianParams) -> QuantumState:
    """Dense eigensolve up to the full-diagonalization size, Lanczos above it"""
    if 2**params.n_sites <= _FULL_EIGH_DIM:
        return ground_state(build_hamiltonian(params))
    return sparse_ground_state(params)


def effective_blockade_hamiltonian(omega: float, delta: float) -> np.ndarray:
    """
    Second-order effective Hamiltonian on the three ordered eight-atom configurations

    Couples the first configuration to the other two with -Omega^2 / (4 Delta).

    Raises:
        SingularityError: if delta == 0
    """
    if delta == 0:
        raise SingularityError("Effective blockade Hamiltonian diverges at delta = 0")
    coupling = -omega**2 / (4.0 * delta)
    H = np.zeros((3, 3))
    H[0, 1] = H[1, 0] = H[0, 2] = H[2, 0] = coupling
    if coupling == 0:
        message = "Effective blockade Hamiltonian vanishes; ground space is 3-fold degenerate"
        logger.warning(message)
        warnings.warn(message, DegenerateGroundStateWarning, stacklevel=2)
    return H
