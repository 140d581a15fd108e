"""
Acceptance-scale reconstruction checks on the eight-atom chain

These train full-size models and take minutes; they are marked slow and run
with `pytest -m slow`.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from rydberg_rbm.baseline.frequency import build_fd, fd_state_fidelity, model_size
from rydberg_rbm.estimators.observables import (
    DiagonalObservable,
    avg_correlator,
    forward_noise,
    mutual_information_rbm,
    xx_connected,
)
from rydberg_rbm.noise.channel import NoiseModel, corrupt_dataset
from rydberg_rbm.quantum.hamiltonian import build_hamiltonian, chain_ground_state, ground_state
from rydberg_rbm.quantum.lindblad import evolve_disorder_averaged
from rydberg_rbm.quantum.measurement import sample_measurements
from rydberg_rbm.quantum.params import HamiltonianParams, LindbladParams, SweepProfile
from rydberg_rbm.quantum.states import QuantumState, approx_z2_state, fidelity, purity
from rydberg_rbm.training.trainer import TrainConfig, train

MEASURED = NoiseModel.measured()


def ordered_ground_state():
    return ground_state(build_hamiltonian(HamiltonianParams(8, 30.0, 2.0, 10.0, 2)))


def full_size_config(**changes):
    cfg = dict(n_hidden=16, cd_steps=30, epochs=1000, seed=3, log_every=0)
    cfg.update(changes)
    return TrainConfig(**cfg)


@pytest.mark.slow
def test_noise_free_reconstruction_of_ordered_state():
    print("\n" + "=" * 70)
    print("TEST: Two-layer reconstruction at Delta = 10 MHz")
    print("=" * 70)

    truth = ordered_ground_state()
    d = sample_measurements(truth, 3000, seed=1)
    machine = train(d, full_size_config()).machine()
    f = fidelity(machine.to_state(), truth)
    print(f"  fidelity = {f:.4f}")
    assert f > 0.95

    # xx correlations peak on the bonds where the ordered configurations differ
    xx = [xx_connected(machine, i, exact=True).value for i in range(7)]
    print(f"  xx_c by bond: {np.round(xx, 4)}")
    peaks = sorted(int(i) for i in np.argsort(np.abs(xx))[::-1][:2])
    assert peaks == [2, 4]
    print("  ✓ PASS\n")


SWEEP = SweepProfile.default()
CHECKPOINTS = range(1, len(SWEEP.checkpoints) + 1)


def sweep_ground_state(k):
    """Ground state at Omega = 2 MHz and the detuning of sweep checkpoint k"""
    delta = SWEEP.delta(SWEEP.checkpoints[k - 1])
    return delta, chain_ground_state(HamiltonianParams(8, 30.0, 2.0, delta, 2))


@pytest.mark.slow
@pytest.mark.parametrize("k", CHECKPOINTS)
def test_noise_free_reconstruction_across_sweep(k):
    delta, truth = sweep_ground_state(k)
    d = sample_measurements(truth, 3000, seed=10 + k)
    f = fidelity(train(d, full_size_config()).machine().to_state(), truth)
    print(f"  checkpoint {k:2d} (Delta={delta:+.2f} MHz): fidelity {f:.4f}")
    assert f > 0.95


@pytest.mark.slow
@pytest.mark.parametrize("k", CHECKPOINTS)
def test_noise_layer_helps_across_sweep(k):
    """Three-layer training is never worse on corrupted records, and clearly better in the ordered phase"""
    delta, truth = sweep_ground_state(k)
    noisy = corrupt_dataset(sample_measurements(truth, 3000, seed=30 + k), MEASURED, seed=50 + k)
    plain = fidelity(train(noisy, full_size_config()).machine().to_state(), truth)
    layered = fidelity(train(noisy, full_size_config(noise=MEASURED)).machine().to_state(), truth)
    print(f"  checkpoint {k:2d} (Delta={delta:+.2f} MHz): two-layer {plain:.4f}, three-layer {layered:.4f}")
    assert layered >= plain
    if k == len(SWEEP.checkpoints):
        assert layered - plain >= 0.01


@pytest.mark.slow
def test_noise_layer_reconstructs_decoherent_sweep():
    """Records from the disorder-averaged master equation, corrupted and learned with the noise layer"""
    print("\n" + "=" * 70)
    print("TEST: Three-layer reconstruction of the decoherent final state")
    print("=" * 70)

    hp = HamiltonianParams(8, 30.0, 0.0, 0.0, 2)
    sweep = SweepProfile.default(n_checkpoints=1)
    (truth,) = evolve_disorder_averaged(QuantumState.basis(8, 0), sweep, hp, LindbladParams(), seed=1)
    noisy = corrupt_dataset(sample_measurements(truth, 3000, seed=6), MEASURED, seed=7)
    machine = train(noisy, full_size_config(noise=MEASURED)).machine()
    f = fidelity(machine.to_state(), truth)
    print(f"  purity of the target {purity(truth):.4f}, fidelity {f:.4f}")
    assert f > 0.90
    print("  ✓ PASS\n")


@pytest.mark.slow
def test_forward_noise_matches_corrupted_records():
    """A three-layer model pushed back through the channel reproduces the raw record statistics"""
    truth = ordered_ground_state()
    noisy = corrupt_dataset(sample_measurements(truth, 3000, seed=3), MEASURED, seed=6)
    machine = train(noisy, full_size_config(noise=MEASURED)).machine()
    for s in (1, 2):
        observed = avg_correlator(noisy, s)
        predicted = forward_noise(machine, MEASURED, DiagonalObservable("avg_zz", distance=s), n_mc=100000, seed=4)
        sigma = np.hypot(observed.std_error, predicted.std_error)
        print(f"  s={s}: records {observed.value:.4f}, model {predicted.value:.4f} +- {sigma:.4f}")
        assert abs(observed.value - predicted.value) <= 3 * sigma + 0.02


@pytest.mark.slow
def test_mutual_information_of_ordered_state():
    """I2 across the middle bond of the learned perturbative state"""
    d = sample_measurements(approx_z2_state(), 3000, seed=4)
    machine = train(d, full_size_config()).machine()
    exact = mutual_information_rbm(machine, 3, exact=True)
    mc = mutual_information_rbm(machine, 3, n_mc=100000, seed=7)
    print(f"  I2(3): exact {exact.value:.4f}, swap {mc.value:.4f} +- {mc.std_error:.4f}")
    assert abs(exact.value - 0.940) < 0.05
    assert abs(mc.value - exact.value) <= 3 * mc.std_error + 0.01


@pytest.mark.slow
def test_rbm_beats_frequency_model_near_transition():
    truth = ground_state(build_hamiltonian(HamiltonianParams(8, 30.0, 2.0, 2.0, 2)))
    d = sample_measurements(truth, 1000, seed=5)
    machine = train(d, full_size_config(n_hidden=8, epochs=500, cd_steps=10)).machine()
    fd = build_fd(d)
    f_rbm, f_fd = fidelity(machine.to_state(), truth), fd_state_fidelity(fd, truth)
    print(f"  RBM {f_rbm:.4f} ({model_size(machine)} parameters), FD {f_fd:.4f} ({model_size(fd)} strings)")
    assert f_rbm >= f_fd


if __name__ == "__main__":
    print("=" * 70)
    print("Acceptance-scale reconstruction checks")
    print("=" * 70)
    print()

    try:
        test_noise_free_reconstruction_of_ordered_state()
        for k in CHECKPOINTS:
            test_noise_free_reconstruction_across_sweep(k)
            test_noise_layer_helps_across_sweep(k)
        test_noise_layer_reconstructs_decoherent_sweep()
        test_forward_noise_matches_corrupted_records()
        test_mutual_information_of_ordered_state()
        test_rbm_beats_frequency_model_near_transition()

        print("=" * 70)
        print("All tests passed! ✓")
        print("=" * 70)

    except AssertionError as e:
        print(f"\n✗ TEST FAILED: {e}")
        sys.exit(1)
    except Exception as e:
        print(f"\n✗ ERROR: {e}")
        import traceback
        traceback.print_exc()
        sys.exit(1)
