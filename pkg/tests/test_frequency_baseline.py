"""
Test the frequency-distribution baseline and its fidelity bound
"""

import math
import sys
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from rydberg_rbm.baseline.frequency import (
    build_fd,
    classical_fidelity,
    distribution_renyi2,
    fd_state_fidelity,
    fidelity_bound,
    model_size,
)
from rydberg_rbm.bits import bits_to_index, configuration, index_to_bits
from rydberg_rbm.dataset import Dataset
from rydberg_rbm.quantum.measurement import sample_measurements
from rydberg_rbm.quantum.states import QuantumState
from rydberg_rbm.rbm.machine import RBM
from rydberg_rbm.training.trainer import nll_exact


def test_lookup_table_from_small_dataset():
    """{00, 00, 01}: counts, probabilities and the -inf amplitude of an unseen string"""
    fd = build_fd(Dataset.from_strings(["00", "00", "01"]))
    assert fd.table == {"00": 2, "01": 1}
    assert np.allclose(fd.probability_table(), [2 / 3, 1 / 3, 0.0, 0.0])
    assert fd.n_samples == 3 and model_size(fd) == 2

    log_psi = fd.log_psi(np.array([[0, 0], [1, 1]], dtype=np.uint8))
    assert log_psi[0] == pytest.approx(0.5 * math.log(2 / 3))
    assert log_psi[1] == -math.inf

    samples = fd.sample(1000, seed=1)
    assert set(map(tuple, samples)) <= {(0, 0), (0, 1)}
    assert np.array_equal(samples, fd.sample(1000, seed=1))
    print("  ✓ PASS: lookup table\n")


def test_fidelity_never_exceeds_bound():
    """F_FD <= sqrt(N_s) exp(-H2/4) on random distributions and dataset sizes"""
    print("\n" + "=" * 70)
    print("TEST: Fidelity bound on random distributions")
    print("=" * 70)

    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(500):
        n = int(rng.integers(1, 9))
        alpha = float(rng.choice([0.1, 0.5, 5.0]))
        p = rng.dirichlet(np.full(2**n, alpha))
        n_samples = int(rng.integers(1, 2000))
        idx = rng.choice(2**n, size=n_samples, p=p)
        fd = build_fd(Dataset(index_to_bits(idx, n)))
        fidelity = classical_fidelity(fd.probability_table(), p)
        bound = fidelity_bound(n_samples, distribution_renyi2(p))
        assert fidelity <= bound + 1e-12, f"N={n}, N_s={n_samples}: {fidelity} > {bound}"
        worst = max(worst, fidelity / bound)

    print(f"  largest F / bound: {worst:.4f}")
    print("  ✓ PASS\n")


def test_uniform_distribution_bound():
    for n in (2, 5, 8):
        p = np.full(2**n, 2.0**-n)
        h2 = distribution_renyi2(p)
        assert h2 == pytest.approx(n * math.log(2))
        assert fidelity_bound(1000, h2) == pytest.approx(math.sqrt(1000) * 2.0 ** (-n / 4))


def test_state_fidelity_with_pure_and_mixed_truth():
    d = Dataset.from_strings(["10", "01", "10", "01"])
    fd = build_fd(d)
    truth = QuantumState.pure(np.array([0.0, 1.0, 1.0, 0.0]) / math.sqrt(2))
    assert fd_state_fidelity(fd, truth) == pytest.approx(1.0)

    negative = QuantumState.pure(np.array([0.0, 1.0, -1.0, 0.0]) / math.sqrt(2))
    with pytest.raises(ValueError):
        fd_state_fidelity(fd, negative)

    # a classical mixture has the same diagonal, so its positive partner is the same state
    mixed = QuantumState.mixed(np.diag([0.0, 0.5, 0.5, 0.0]))
    assert fd_state_fidelity(fd, mixed) == pytest.approx(1.0)

    with pytest.raises(ValueError):
        fd_state_fidelity(fd, QuantumState.basis(3, configuration("101")))
    print("  ✓ PASS: state fidelity\n")


def dataset_nll(d, q):
    """Mean -log q over the records of d"""
    with np.errstate(divide="ignore"):
        return float(-np.mean(np.log(q[bits_to_index(d.bits)])))


def test_lookup_table_maximizes_training_likelihood():
    """No distribution assigns the training records a lower NLL than the frequency table"""
    rng = np.random.default_rng(3)
    d = Dataset(index_to_bits(rng.choice(16, size=300, p=rng.dirichlet(np.ones(16))), 4))
    p_fd = build_fd(d).probability_table()
    best = dataset_nll(d, p_fd)
    freqs = d.frequencies()
    seen = freqs > 0
    assert best == pytest.approx(-np.sum(freqs[seen] * np.log(freqs[seen])), abs=1e-12)

    uniform = np.full(16, 1.0 / 16)
    for eps in (1e-3, 0.1, 0.5):
        assert dataset_nll(d, (1.0 - eps) * p_fd + eps * uniform) > best
    for _ in range(200):
        assert dataset_nll(d, rng.dirichlet(np.ones(16))) >= best
    assert nll_exact(RBM(4, 4, init_std=0.5), d) >= best
    print("  ✓ PASS: maximum likelihood\n")


def test_fidelity_rises_with_dataset_size():
    """F_FD against a positive six-site state grows with N_s and approaches 1"""
    print("\n" + "=" * 70)
    print("TEST: FD fidelity vs dataset size")
    print("=" * 70)

    amps = np.abs(np.random.default_rng(5).normal(size=64))
    truth = QuantumState(6, amps / np.linalg.norm(amps))
    values = []
    for n_samples in (100, 1000, 10000, 100000):
        fd = build_fd(sample_measurements(truth, n_samples, seed=n_samples))
        values.append(fd_state_fidelity(fd, truth))
        print(f"  N_s={n_samples:>6}: F_FD={values[-1]:.5f}")

    assert all(a < b for a, b in zip(values, values[1:]))
    assert values[-1] > 0.99
    print("  ✓ PASS\n")


def test_model_sizes():
    assert model_size(RBM(8, 16)) == 8 * 16 + 8 + 16 == 152
    fd = build_fd(Dataset.from_strings(["0101", "1010", "0101", "1001"]))
    assert model_size(fd) == 3


def test_invalid_inputs_rejected():
    with pytest.raises(ValueError):
        classical_fidelity([0.5, 0.6], [0.5, 0.5])
    with pytest.raises(ValueError):
        classical_fidelity([0.5, 0.5], [1.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        fidelity_bound(10, -0.1)
    with pytest.raises(ValueError):
        build_fd(Dataset(np.zeros((0, 3), dtype=np.uint8)))


def test_csv_is_sorted_by_bitstring():
    fd = build_fd(Dataset.from_strings(["110", "001", "110", "010", "001", "001"]))
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "fd.csv"
        fd.to_csv(path)
        frame = pd.read_csv(path, dtype={"bitstring": str})
    assert list(frame["bitstring"]) == ["001", "010", "110"]
    assert list(frame["count"]) == [3, 1, 2]


if __name__ == "__main__":
    print("=" * 70)
    print("Testing frequency-distribution baseline")
    print("=" * 70)
    print()

    try:
        test_lookup_table_from_small_dataset()
        test_fidelity_never_exceeds_bound()
        test_uniform_distribution_bound()
        test_state_fidelity_with_pure_and_mixed_truth()
        test_lookup_table_maximizes_training_likelihood()
        test_fidelity_rises_with_dataset_size()
        test_model_sizes()
        test_invalid_inputs_rejected()
        test_csv_is_sorted_by_bitstring()

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
