"""
Test the bit-flip measurement channel and the noise layer built on it
"""

import itertools
import math
import sys
from pathlib import Path

import numpy as np
import pytest
import torch

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from rydberg_rbm.bits import all_configurations
from rydberg_rbm.dataset import Dataset
from rydberg_rbm.exceptions import SingularityError
from rydberg_rbm.noise.channel import (
    NoiseModel,
    apply_channel,
    channel_prob,
    channel_prob_from_couplings,
    clamped_gibbs,
    clamped_visible_conditional,
    corrupt_dataset,
    corrupted_distribution_exact,
    effective_couplings,
)
from rydberg_rbm.rbm.machine import RBM

MEASURED = NoiseModel.measured()


def random_rbm(n_visible, n_hidden, seed):
    rng = np.random.default_rng(seed)
    return RBM.from_arrays(rng.normal(0, 0.5, (n_hidden, n_visible)), rng.normal(0, 0.5, n_visible),
                           rng.normal(0, 0.5, n_hidden))


def test_channel_prob_is_product_of_site_factors():
    rng = np.random.default_rng(0)
    tau, sigma = rng.integers(0, 2, 8), rng.integers(0, 2, 8)
    expected = 1.0
    for t, s in zip(tau, sigma):
        expected *= MEASURED.single_site_matrix()[t, s]
    assert abs(channel_prob(tau, sigma, MEASURED) - expected) < 1e-15
    with pytest.raises(ValueError):
        channel_prob([0, 1], [0, 1, 1], MEASURED)
    print("  ✓ PASS: product of site factors\n")


def test_channel_is_stochastic():
    """Records sum to probability one for every true configuration"""
    configs = all_configurations(4)
    for sigma in configs:
        total = sum(channel_prob(tau, sigma, MEASURED) for tau in configs)
        assert abs(total - 1.0) < 1e-12


def test_apply_channel_matches_transfer_matrix():
    """Per-site rates applied in site order equal (T_0 x T_1 x T_2) p"""
    print("\n" + "=" * 70)
    print("TEST: Channel vs explicit transfer matrix")
    print("=" * 70)

    nm = NoiseModel(p10_sites=(0.01, 0.02, 0.03), p01_sites=(0.04, 0.05, 0.06))
    machine = random_rbm(3, 3, seed=1)
    p = machine.probability_table()
    transfer = np.array([[1.0]])
    for site in range(3):
        transfer = np.kron(transfer, nm.single_site_matrix(site, 3))

    expected = transfer @ p
    numpy_result = corrupted_distribution_exact(machine, nm)
    torch_result = apply_channel(torch.from_numpy(p), nm, 3).numpy()
    print(f"  max deviation (numpy): {np.max(np.abs(numpy_result - expected)):.2e}")
    assert np.allclose(numpy_result, expected, atol=1e-12)
    assert np.allclose(torch_result, expected, atol=1e-12)
    assert abs(numpy_result.sum() - 1.0) < 1e-10

    assert np.array_equal(corrupted_distribution_exact(machine, NoiseModel()), p)
    print("  ✓ PASS\n")


def test_clamped_posterior_single_site_value():
    """Uniform prior, record 1: posterior 0.96 / (0.96 + 0.01)"""
    machine = RBM(3, 2, init_std=0.0)
    tau = torch.ones(3, dtype=torch.float64)
    hidden = torch.zeros(2, dtype=torch.float64)
    posterior = clamped_visible_conditional(machine, MEASURED, tau, hidden)
    assert torch.allclose(posterior, torch.full((3,), 0.96 / 0.97, dtype=torch.float64), atol=1e-12)
    print(f"  p(sigma=1 | tau=1) = {float(posterior[0]):.4f}")


def test_clamped_posterior_matches_joint_enumeration():
    machine = random_rbm(2, 2, seed=2)
    a = machine.arrays()
    W, b = a["weights"], a["visible_bias"]
    configs = all_configurations(2)
    for tau in configs:
        for h in itertools.product((0.0, 1.0), repeat=2):
            h = np.array(h)
            weights = np.array([channel_prob(tau, s, MEASURED) * math.exp(b @ s + h @ (W @ s)) for s in configs])
            expected = (weights[:, None] * configs).sum(axis=0) / weights.sum()
            got = clamped_visible_conditional(machine, MEASURED, torch.from_numpy(tau).double(),
                                              torch.from_numpy(h)).detach().numpy()
            assert np.allclose(got, expected, atol=1e-10)
    print("  ✓ PASS: clamped posterior\n")


def test_clamped_chain_with_noiseless_channel_returns_records():
    machine = random_rbm(4, 3, seed=3)
    records = torch.from_numpy(np.random.default_rng(0).integers(0, 2, (50, 4))).double()
    out = clamped_gibbs(machine, NoiseModel(), records, 5, torch.Generator().manual_seed(0))
    assert torch.equal(out, records)


def test_clamped_posterior_with_saturated_prior_and_zero_rates():
    """q of exactly 0 or 1 against a record a zero rate makes certain: the record wins, no NaN"""
    machine = RBM.from_arrays(np.zeros((2, 4)), np.array([-1000.0, 1000.0, -1000.0, 1000.0]), np.zeros(2))
    hidden = torch.zeros(2, dtype=torch.float64)
    q = machine.conditional_visible(hidden)
    assert q[0] == 0.0 and q[1] == 1.0

    records = torch.tensor([1.0, 0.0, 0.0, 1.0], dtype=torch.float64)
    trivial = clamped_visible_conditional(machine, NoiseModel(), records, hidden)
    assert torch.equal(trivial, records)

    # p10 = 0: a recorded 1 proves sigma = 1; a recorded 0 still follows the prior
    one_sided = clamped_visible_conditional(machine, NoiseModel(0.0, 0.04), records, hidden)
    assert not torch.isnan(one_sided).any()
    assert one_sided[0] == 1.0 and one_sided[3] == 1.0 and one_sided[2] == 0.0
    print("  ✓ PASS: saturated posterior\n")


def test_effective_couplings():
    """Noise-layer couplings reproduce the channel exactly"""
    couplings = effective_couplings(MEASURED)
    print(f"  W~ = {couplings.w_tilde:.4f}")
    assert abs(couplings.w_tilde - math.log(0.96 * 0.99 / (0.01 * 0.04))) < 1e-12
    assert abs(couplings.w_tilde - 7.7735) < 1e-3
    T = MEASURED.single_site_matrix()
    for tau, sigma in itertools.product((0, 1), repeat=2):
        assert abs(channel_prob_from_couplings(tau, sigma, couplings) - T[tau, sigma]) < 1e-12

    with pytest.raises(SingularityError):
        effective_couplings(NoiseModel(p10=0.0, p01=0.04))


def test_rates_validated():
    with pytest.raises(ValueError):
        NoiseModel(p10=0.5)
    with pytest.raises(ValueError):
        NoiseModel(p01=-0.1)
    with pytest.raises(ValueError):
        NoiseModel(p10_sites=(0.1, 0.2), p01_sites=(0.1,))
    with pytest.raises(ValueError):
        NoiseModel(p10_sites=(0.1, 0.2)).rates(3)
    assert NoiseModel().is_trivial and not MEASURED.is_trivial
    assert NoiseModel.from_dict(MEASURED.to_dict()) == MEASURED


def test_corrupt_dataset():
    """Flip frequencies follow the rates; zero rates leave the records untouched"""
    print("\n" + "=" * 70)
    print("TEST: Dataset corruption")
    print("=" * 70)

    bits = np.zeros((100000, 2), dtype=np.uint8)
    bits[:, 1] = 1
    d = Dataset(bits, seed=1, source="test")
    noisy = corrupt_dataset(d, MEASURED, seed=5)
    up = noisy.bits[:, 0].mean()
    down = 1.0 - noisy.bits[:, 1].mean()
    print(f"  observed p10={up:.4f}, p01={down:.4f}")
    assert abs(up - 0.01) < 0.002
    assert abs(down - 0.04) < 0.004
    assert noisy.noise == MEASURED.to_dict() and noisy.noise_seed == 5
    assert np.array_equal(corrupt_dataset(d, MEASURED, seed=5).bits, noisy.bits)

    clean = corrupt_dataset(d, NoiseModel(), seed=5)
    assert np.array_equal(clean.bits, d.bits)
    print("  ✓ PASS\n")


if __name__ == "__main__":
    print("=" * 70)
    print("Testing measurement noise channel")
    print("=" * 70)
    print()

    try:
        test_channel_prob_is_product_of_site_factors()
        test_channel_is_stochastic()
        test_apply_channel_matches_transfer_matrix()
        test_clamped_posterior_single_site_value()
        test_clamped_posterior_matches_joint_enumeration()
        test_clamped_chain_with_noiseless_channel_returns_records()
        test_clamped_posterior_with_saturated_prior_and_zero_rates()
        test_effective_couplings()
        test_rates_validated()
        test_corrupt_dataset()

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
