"""
Time evolution of the driven Rydberg chain

Density matrices follow the master equation

    d rho/dt = -i [H(t) + H_dis, rho]
               + sum_i gamma_rg (L_i rho L_i^+ - 1/2 {L_i^+ L_i, rho})     L_i = |g><r|_i
               + sum_i gamma_gg (P_i rho P_i - 1/2 {P_i, rho})             P_i = |g><g|_i

with H_dis = -sum_i delta_i n_i. Both the Hamiltonian and the jump terms act
through index arithmetic on the occupation basis; no dense superoperator is
formed. Integration is fixed-step RK4 with checkpoints hit exactly.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional

import numpy as np

from rydberg_rbm.bits import all_configurations
from rydberg_rbm.exceptions import IntegrationError
from rydberg_rbm.quantum.hamiltonian import (
    excitation_numbers,
    flip_masks,
    interaction_energies,
)
from rydberg_rbm.quantum.params import HamiltonianParams, LindbladParams, SweepProfile
from rydberg_rbm.quantum.states import QuantumState
from rydberg_rbm.settings import get_settings, require_mixed_sites, require_pure_sites

logger = logging.getLogger(__name__)

DEFAULT_STEPS = 4096
TRACE_TOLERANCE = 1e-6
# Negative eigenvalues above -TRACE_TOLERANCE but below this are RK4 round-off and get clipped
CLIP_THRESHOLD = 1e-12
DISORDER_BATCH = 4


def frequency_scale(angular: Optional[bool] = None) -> float:
    """2*pi when MHz are read as angular frequencies, else 1"""
    if angular is None:
        angular = get_settings().angular_units
    return 2.0 * math.pi if angular else 1.0


def draw_disorder(n_sites: int, lp: LindbladParams, seed: int) -> np.ndarray:
    """
    Doppler shifts for every realization, shape (n_disorder, n_sites)

    Realization r uses numpy.random.default_rng(SeedSequence(seed).spawn(n)[r]),
    so each row depends only on (seed, r).
    """
    children = np.random.SeedSequence(seed).spawn(lp.n_disorder)
    return np.stack([np.random.default_rng(c).normal(0.0, lp.doppler_rms, n_sites) for c in children])


class _ChainDynamics:
    """Right-hand sides for one chain, optionally batched over disorder realizations"""

    def __init__(self, hp: HamiltonianParams, lp: Optional[LindbladParams],
                 disorder: Optional[np.ndarray], scale: float):
        n = hp.n_sites
        self.n_sites = n
        self.scale = scale
        self.idx = np.arange(2**n)
        self.flips = [self.idx ^ m for m in flip_masks(n)]
        self.interaction = scale * interaction_energies(hp)
        self.excitations = scale * excitation_numbers(n)

        # (R, dim) disorder energies, or 0
        if disorder is None:
            self.disorder = 0.0
        else:
            disorder = np.atleast_2d(np.asarray(disorder, dtype=np.float64))
            self.disorder = -scale * (disorder @ all_configurations(n).T.astype(np.float64))

        self.dissipative = lp is not None and not lp.is_coherent
        if self.dissipative:
            occ = all_configurations(n).astype(np.float64)
            ground = 1.0 - occ
            self.gamma_rg = lp.gamma_rg
            self.raises = [self.idx | m for m in flip_masks(n)]
            self.ground_pairs = [np.outer(ground[:, i], ground[:, i]) for i in range(n)]
            n_tot = occ.sum(axis=1)
            static = -0.5 * lp.gamma_rg * (n_tot[:, None] + n_tot[None, :])
            for i in range(n):
                g = ground[:, i]
                static += lp.gamma_gg * (np.outer(g, g) - 0.5 * (g[:, None] + g[None, :]))
            self.static = static

    def energies(self, delta: float) -> np.ndarray:
        return self.interaction - delta * self.excitations + self.disorder

    def rho_dot(self, rho: np.ndarray, omega: float, delta: float) -> np.ndarray:
        """rho has shape (R, dim, dim)"""
        e = np.broadcast_to(self.energies(delta), rho.shape[:-1])
        out = -1j * (e[..., :, None] - e[..., None, :]) * rho
        half_rabi = 0.5j * self.scale * omega
        if omega != 0.0:
            flipped = np.zeros_like(rho)
            for f in self.flips:
                flipped += np.take(rho, f, axis=-2) - np.take(rho, f, axis=-1)
            out += half_rabi * flipped
        if self.dissipative:
            out += self.static * rho
            if self.gamma_rg:
                for r, pair in zip(self.raises, self.ground_pairs):
                    out += self.gamma_rg * pair * np.take(np.take(rho, r, axis=-2), r, axis=-1)
        return out

    def psi_dot(self, psi: np.ndarray, omega: float, delta: float) -> np.ndarray:
        """psi has shape (R, dim)"""
        out = -1j * self.energies(delta) * psi
        if omega != 0.0:
            flipped = np.zeros_like(psi)
            for f in self.flips:
                flipped += np.take(psi, f, axis=-1)
            out += 0.5j * self.scale * omega * flipped
        return out


def _segment_steps(t0: float, t1: float, dt: float) -> int:
    return max(1, int(math.ceil((t1 - t0) / dt - 1e-9)))


def _integrate(y0: np.ndarray, derivative, sweep: SweepProfile, dt: float) -> List[np.ndarray]:
    """Fixed-step RK4 from t=0 through every checkpoint"""
    y = y0
    t = 0.0
    out = []
    for t_next in sweep.checkpoints:
        if t_next > t:
            n_steps = _segment_steps(t, t_next, dt)
            h = (t_next - t) / n_steps
            for step in range(n_steps):
                ts = t + step * h
                tm = ts + 0.5 * h
                te = ts + h
                om_s, de_s = sweep.omega(ts), sweep.delta(ts)
                om_m, de_m = sweep.omega(tm), sweep.delta(tm)
                om_e, de_e = sweep.omega(te), sweep.delta(te)
                k1 = derivative(y, om_s, de_s)
                k2 = derivative(y + 0.5 * h * k1, om_m, de_m)
                k3 = derivative(y + 0.5 * h * k2, om_m, de_m)
                k4 = derivative(y + h * k3, om_e, de_e)
                y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t = t_next
        out.append(y.copy())
    return out


def _resolve_dt(sweep: SweepProfile, dt: Optional[float]) -> float:
    if dt is None:
        return sweep.total_time / DEFAULT_STEPS
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    return float(dt)


def _initial_density(initial: QuantumState) -> np.ndarray:
    return np.asarray(initial.density_matrix(), dtype=np.complex128)


def _evolve_density_batch(initial: np.ndarray, sweep: SweepProfile, hp: HamiltonianParams,
                          lp: LindbladParams, disorder: Optional[np.ndarray], dt: float,
                          scale: float) -> List[np.ndarray]:
    """Returns per-checkpoint arrays of shape (R, dim, dim)"""
    dynamics = _ChainDynamics(hp, lp, disorder, scale)
    n_real = 1 if disorder is None else np.atleast_2d(disorder).shape[0]
    rho0 = np.broadcast_to(initial, (n_real,) + initial.shape).copy()
    return _integrate(rho0, dynamics.rho_dot, sweep, dt)


def _clip_spectrum(rho: np.ndarray, where: str) -> np.ndarray:
    """Hermitian part of rho with round-off negative eigenvalues set to zero"""
    rho = 0.5 * (rho + rho.conj().T)
    evals, evecs = np.linalg.eigh(rho)
    if evals[0] <= -TRACE_TOLERANCE:
        raise IntegrationError(f"Density matrix has eigenvalue {evals[0]:.3g} {where}")
    if evals[0] >= -CLIP_THRESHOLD:
        return rho
    logger.debug(f"Clipping negative spectrum down to {evals[0]:.3g} {where}")
    clipped = np.clip(evals, 0.0, None)
    rho = (evecs * clipped) @ evecs.conj().T
    return rho / np.trace(rho).real


def _checked_states(n_sites: int, rhos: List[np.ndarray], sweep: SweepProfile) -> List[QuantumState]:
    """Validate RK4 output; any violation is an integration failure"""
    states = []
    for t, rho in zip(sweep.checkpoints, rhos):
        where = f"at t={t:.4g} us; use a smaller time step"
        if not np.all(np.isfinite(rho)):
            raise IntegrationError(f"Density matrix became non-finite {where}")
        drift = abs(np.trace(rho).real - 1.0)
        if drift >= TRACE_TOLERANCE:
            raise IntegrationError(f"Trace drifted by {drift:.3g} {where}")
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm >= TRACE_TOLERANCE:
            raise IntegrationError(f"Density matrix lost Hermiticity ({herm:.3g}) {where}")
        states.append(QuantumState(n_sites, _clip_spectrum(rho, where), atol=TRACE_TOLERANCE))
    return states


def evolve_lindblad(
    initial: QuantumState,
    sweep: SweepProfile,
    hp: HamiltonianParams,
    lp: LindbladParams,
    disorder: Optional[np.ndarray] = None,
    dt: Optional[float] = None,
    angular: Optional[bool] = None,
) -> List[QuantumState]:
    """
    Integrate the master equation for one disorder realization

    Args:
        initial: Starting state (pure states are promoted to density matrices)
        sweep: Drive profile and checkpoint times
        hp: Chain couplings; omega and delta are taken from the sweep
        lp: Decoherence rates (n_disorder and doppler_rms are ignored here)
        disorder: Per-site Doppler shifts delta_i in MHz, or None
        dt: Target step, default total_time / 4096
        angular: Multiply frequencies by 2*pi (default from settings)

    Returns:
        Mixed states at sweep.checkpoints

    Raises:
        IntegrationError: if the state turns non-finite, non-Hermitian, non-positive
            or drifts in trace by 1e-6 or more
    """
    require_mixed_sites(hp.n_sites, "Lindblad evolution")
    if initial.n_sites != hp.n_sites:
        raise ValueError(f"Initial state has N={initial.n_sites}, Hamiltonian N={hp.n_sites}")
    step = _resolve_dt(sweep, dt)
    if disorder is not None:
        disorder = np.asarray(disorder, dtype=np.float64).reshape(1, hp.n_sites)
    rhos = _evolve_density_batch(_initial_density(initial), sweep, hp, lp, disorder,
                                 step, frequency_scale(angular))
    logger.debug(f"Lindblad evolution N={hp.n_sites}: {len(rhos)} checkpoints, dt={step:.3g} us")
    return _checked_states(hp.n_sites, [r[0] for r in rhos], sweep)


def evolve_disorder_averaged(
    initial: QuantumState,
    sweep: SweepProfile,
    hp: HamiltonianParams,
    lp: LindbladParams,
    seed: int,
    threads: int = 0,
    dt: Optional[float] = None,
    angular: Optional[bool] = None,
) -> List[QuantumState]:
    """
    Average the master-equation solution over lp.n_disorder Doppler realizations

    Realizations are evolved in fixed batches (optionally in worker processes)
    and summed in realization order, so the result does not depend on threads.
    """
    require_mixed_sites(hp.n_sites, "Lindblad evolution")
    if initial.n_sites != hp.n_sites:
        raise ValueError(f"Initial state has N={initial.n_sites}, Hamiltonian N={hp.n_sites}")
    step = _resolve_dt(sweep, dt)
    scale = frequency_scale(angular)
    rho0 = _initial_density(initial)

    if lp.doppler_rms == 0:
        logger.info("Doppler width is zero; evolving a single realization")
        rhos = _evolve_density_batch(rho0, sweep, hp, lp, None, step, scale)
        return _checked_states(hp.n_sites, [r[0] for r in rhos], sweep)

    disorder = draw_disorder(hp.n_sites, lp, seed)
    batches = [disorder[i:i + DISORDER_BATCH] for i in range(0, lp.n_disorder, DISORDER_BATCH)]
    workers = min(get_settings().resolved_threads(threads), len(batches))
    logger.info(f"Evolving {lp.n_disorder} disorder realizations in {len(batches)} batches "
                f"on {workers} worker(s)")

    args = [(rho0, sweep, hp, lp, b, step, scale) for b in batches]
    if workers <= 1:
        results = [_evolve_density_batch(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evolve_density_batch, *zip(*args)))

    averaged = []
    for k in range(len(sweep.checkpoints)):
        total = np.zeros_like(rho0)
        for batch in results:
            for rho in batch[k]:
                total += rho
        averaged.append(total / lp.n_disorder)
    return _checked_states(hp.n_sites, averaged, sweep)


def evolve_unitary(
    initial: QuantumState,
    sweep: SweepProfile,
    hp: HamiltonianParams,
    disorder: Optional[np.ndarray] = None,
    dt: Optional[float] = None,
    angular: Optional[bool] = None,
) -> List[QuantumState]:
    """
    Schroedinger evolution of a pure state with the same RK4 scheme

    Raises:
        IntegrationError: if the norm is non-finite or drifts by 1e-6 or more
    """
    require_pure_sites(hp.n_sites, "unitary evolution")
    if not initial.is_pure:
        raise ValueError("evolve_unitary needs a pure initial state")
    step = _resolve_dt(sweep, dt)
    dynamics = _ChainDynamics(hp, None, disorder, frequency_scale(angular))
    psi0 = np.asarray(initial.data, dtype=np.complex128)[None, :]
    states = []
    for t, psi in zip(sweep.checkpoints, _integrate(psi0, dynamics.psi_dot, sweep, step)):
        norm = np.linalg.norm(psi[0])
        if not np.isfinite(norm) or abs(norm - 1.0) >= TRACE_TOLERANCE:
            raise IntegrationError(f"Norm drifted by {abs(norm - 1.0):.3g} at t={t:.4g} us; "
                                   f"use a smaller time step")
        states.append(QuantumState(hp.n_sites, psi[0], atol=TRACE_TOLERANCE))
    return states
