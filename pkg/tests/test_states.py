"""
Test dense states, reduced states, entropies and fidelities
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from rydberg_rbm.quantum.hamiltonian import build_hamiltonian, ground_state
from rydberg_rbm.quantum.measurement import sample_measurements
from rydberg_rbm.quantum.lindblad import evolve_lindblad
from rydberg_rbm.quantum.params import HamiltonianParams, LindbladParams, SweepProfile
from rydberg_rbm.quantum.states import (
    QuantumState,
    approx_z2_state,
    fidelity,
    mutual_information_exact,
    partial_trace,
    positive_pure_partner,
    purity,
    renyi_entropy,
    subsystem_avg_fidelity,
    subsystem_avg_renyi2,
    uhlmann_fidelity,
)


def random_pure(n, rng, complex_=True):
    vec = rng.normal(size=2**n) + (1j * rng.normal(size=2**n) if complex_ else 0.0)
    return QuantumState(n, vec / np.linalg.norm(vec))


def random_mixed(n, rng, rank=None):
    dim = 2**n
    g = rng.normal(size=(dim, rank or dim)) + 1j * rng.normal(size=(dim, rank or dim))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return QuantumState(n, rho / np.trace(rho).real)


def test_maximally_mixed_qubit_entropy():
    """S2 of diag(1/2, 1/2) is log 2; pure states have zero entropy"""
    mixed = QuantumState(1, np.diag([0.5, 0.5]))
    assert abs(renyi_entropy(mixed, 2) - np.log(2)) < 1e-12
    assert abs(renyi_entropy(mixed, 3) - np.log(2)) < 1e-12
    assert renyi_entropy(random_pure(3, np.random.default_rng(0)), 2) == 0.0
    with pytest.raises(ValueError):
        renyi_entropy(mixed, 1)
    print("  ✓ PASS: entropy of a mixed qubit\n")


def test_ordered_state_mutual_information():
    """I2 across the middle of the ordered state is 2 * (-log 0.625)"""
    print("\n" + "=" * 70)
    print("TEST: Mutual information of the perturbative ordered state")
    print("=" * 70)

    z2 = approx_z2_state()
    i2_mid = mutual_information_exact(z2, 3, 2)
    i2_edge = mutual_information_exact(z2, 1, 2)
    print(f"  I2(s=3) = {i2_mid:.6f}  (expected {-2 * np.log(0.625):.6f})")
    print(f"  I2(s=1) = {i2_edge:.2e}")

    assert abs(i2_mid + 2 * np.log(0.625)) < 1e-9
    assert abs(i2_mid - 0.94) < 1e-3
    assert abs(i2_edge) < 1e-9, "Site 0 is always excited, so it carries no entanglement"
    print("  ✓ PASS\n")


def test_schmidt_symmetry():
    """S_n(A) = S_n(complement) for pure states"""
    rng = np.random.default_rng(11)
    for _ in range(5):
        psi = random_pure(5, rng)
        for s in range(1, 5):
            for n in (2, 3):
                a = renyi_entropy(partial_trace(psi, range(s)), n)
                b = renyi_entropy(partial_trace(psi, range(s, 5)), n)
                assert abs(a - b) < 1e-9, f"S_{n}(A)={a} != S_{n}(B)={b} at s={s}"
    print("  ✓ PASS: Schmidt symmetry\n")


def test_partial_trace_of_mixed_state():
    """Tracing a product of density matrices returns the kept factor"""
    rng = np.random.default_rng(5)
    a, b = random_mixed(1, rng), random_mixed(2, rng)
    product = QuantumState(3, np.kron(a.data, b.data))
    assert np.allclose(partial_trace(product, [0]).data, a.data, atol=1e-12)
    assert np.allclose(partial_trace(product, [1, 2]).data, b.data, atol=1e-12)
    assert abs(purity(product) - purity(a) * purity(b)) < 1e-12


def test_pure_vs_mixed_fidelity_formulas_agree():
    """sqrt(<psi|rho|psi>) equals the full Uhlmann formula"""
    rng = np.random.default_rng(2)
    for _ in range(10):
        psi, rho = random_pure(3, rng), random_mixed(3, rng)
        short = fidelity(psi, rho)
        full = uhlmann_fidelity(psi.density_matrix(), rho.data)
        assert abs(short - full) < 1e-9, f"{short} vs {full}"
    print("  ✓ PASS: fidelity formulas agree\n")


def test_fidelity_symmetric_and_one_for_equal_states():
    rng = np.random.default_rng(8)
    for _ in range(10):
        a, b = random_mixed(2, rng), random_mixed(2, rng)
        assert abs(fidelity(a, b) - fidelity(b, a)) < 1e-9
        assert abs(fidelity(a, a) - 1.0) < 1e-9
        assert fidelity(a, b) < 1.0 - 1e-6
    psi = random_pure(4, rng)
    assert abs(fidelity(psi, psi) - 1.0) < 1e-12
    assert abs(subsystem_avg_fidelity(psi, psi, 2) - 1.0) < 1e-9


def dephased_plus_states(alphas, gamma=1.0, t=1.0):
    """|+++> under pure |g> dephasing for time t; coherences shrink by exp(-alpha gamma t / 2)"""
    hp = HamiltonianParams(3, 1e-9, 0.0, 0.0)
    sweep = SweepProfile.from_points([0.0, t], [0.0, 0.0], [0.0, 0.0], [t])
    plus = QuantumState(3, np.full(8, 1.0 / np.sqrt(8.0)))
    base = LindbladParams(gamma_rg=0.0, gamma_gg=gamma, doppler_rms=0.0, n_disorder=1)
    return [evolve_lindblad(plus, sweep, hp, base.scaled(a), dt=t / 512)[-1] for a in alphas]


def test_subsystem_fidelity_under_dephasing():
    """
    Windows of a dephased product state against the coherent one

    A single site has fidelity sqrt((1 + c) / 2) with c = exp(-alpha gamma t / 2),
    and fidelity is multiplicative over the product, so windows of s sites give f1^s.
    """
    print("\n" + "=" * 70)
    print("TEST: Subsystem-averaged fidelity vs dephasing strength")
    print("=" * 70)

    alphas = [0.5, 1.0, 2.0, 4.0]
    coherent, *dephased = dephased_plus_states([0.0] + alphas)
    previous = {s: 1.0 for s in (1, 2, 3)}
    for alpha, state in zip(alphas, dephased):
        f1 = np.sqrt((1.0 + np.exp(-alpha / 2.0)) / 2.0)

        by_hand = np.mean([fidelity(partial_trace(state, [i]), partial_trace(coherent, [i])) for i in range(3)])
        got = {s: subsystem_avg_fidelity(state, coherent, s) for s in (1, 2, 3)}
        print(f"  alpha={alpha}: F1={got[1]:.6f} (analytic {f1:.6f}), F2={got[2]:.6f}, F3={got[3]:.6f}")

        assert abs(got[1] - by_hand) < 1e-12
        assert abs(got[1] - f1) < 1e-6
        assert abs(got[2] - f1**2) < 1e-6
        assert got[3] == fidelity(state, coherent)
        assert abs(got[3] - f1**3) < 1e-6
        for s in (1, 2, 3):
            assert got[s] < previous[s], f"window {s} fidelity did not drop at alpha={alpha}"
            previous[s] = got[s]
    print("  ✓ PASS\n")


def test_validation_tolerance_covers_round_off_eigenvalues():
    """Eigenvalues of -5e-8 pass at atol=1e-6 and fail at the default tolerance"""
    rho = np.diag([0.5 + 5e-8, 0.5, 0.0, -5e-8])
    assert QuantumState(2, rho, atol=1e-6).kind == "mixed"
    with pytest.raises(ValueError, match="negative eigenvalue"):
        QuantumState(2, rho)


def test_positive_pure_partner():
    """Positive pure input is returned unchanged; mixed input keeps its diagonal"""
    rng = np.random.default_rng(4)
    vec = np.abs(rng.normal(size=8))
    psi = QuantumState(3, vec / np.linalg.norm(vec))
    assert np.allclose(positive_pure_partner(psi).data, psi.data, atol=1e-12)

    rho = random_mixed(3, rng)
    partner = positive_pure_partner(rho)
    assert partner.is_pure
    assert np.allclose(partner.probabilities(), rho.probabilities(), atol=1e-12)


def test_positive_pure_partner_lower_bound():
    """
    The positive pure partner never has larger subsystem Renyi entropy

    Checked on 200 random mixed states for n = 2, 3 and every bipartition.
    """
    print("\n" + "=" * 70)
    print("TEST: Positive-pure partner entropy bound")
    print("=" * 70)

    rng = np.random.default_rng(21)
    worst = -np.inf
    for trial in range(200):
        n = 2 + trial % 2
        rho = random_mixed(n, rng, rank=int(rng.integers(1, 2**n + 1)))
        partner = positive_pure_partner(rho)
        for s in range(1, n):
            for order in (2, 3):
                for region in (range(s), range(s, n)):
                    bound = renyi_entropy(partial_trace(partner, region), order)
                    actual = renyi_entropy(partial_trace(rho, region), order)
                    worst = max(worst, bound - actual)
                    assert bound <= actual + 1e-9, f"trial {trial}: {bound} > {actual}"

    print(f"  Largest S(partner) - S(rho): {worst:.3e}")
    print("  ✓ PASS\n")


def test_subsystem_average_entropy():
    z2 = approx_z2_state()
    assert subsystem_avg_renyi2(z2, 8) == 0.0
    assert subsystem_avg_renyi2(z2, 1) >= 0.0
    with pytest.raises(ValueError):
        subsystem_avg_renyi2(z2, 9)


def test_state_validation():
    with pytest.raises(ValueError):
        QuantumState(2, np.array([1.0, 1.0, 0.0, 0.0]))
    with pytest.raises(ValueError):
        QuantumState(2, np.ones(3))
    with pytest.raises(ValueError):
        QuantumState(1, np.array([[0.5, 0.1], [0.2, 0.5]]))
    with pytest.raises(ValueError):
        partial_trace(approx_z2_state(), [8])


def test_state_json_preserves_complex_data():
    rng = np.random.default_rng(1)
    psi = random_pure(3, rng)
    restored = QuantumState.from_json(psi.to_json())
    assert restored.kind == "pure"
    assert np.array_equal(restored.data, psi.data)


def test_ground_state_sampling_converges():
    """Empirical frequencies of 10^5 records approach |psi|^2"""
    print("\n" + "=" * 70)
    print("TEST: Sampling an N=8 ground state")
    print("=" * 70)

    gs = ground_state(build_hamiltonian(HamiltonianParams(8, 30.0, 2.0, 1.0, 2)))
    d = sample_measurements(gs, 100000, seed=7)
    tv = 0.5 * np.sum(np.abs(d.frequencies() - gs.probabilities()))
    print(f"  Total variation: {tv:.4f}")
    assert tv < 0.05
    assert d.seed == 7 and d.n_sites == 8

    again = sample_measurements(gs, 100000, seed=7)
    assert np.array_equal(again.bits, d.bits), "Sampling must be deterministic under its seed"
    print("  ✓ PASS\n")


if __name__ == "__main__":
    print("=" * 70)
    print("Testing quantum states")
    print("=" * 70)
    print()

    try:
        test_maximally_mixed_qubit_entropy()
        test_ordered_state_mutual_information()
        test_schmidt_symmetry()
        test_partial_trace_of_mixed_state()
        test_pure_vs_mixed_fidelity_formulas_agree()
        test_fidelity_symmetric_and_one_for_equal_states()
        test_subsystem_fidelity_under_dephasing()
        test_validation_tolerance_covers_round_off_eigenvalues()
        test_positive_pure_partner()
        test_positive_pure_partner_lower_bound()
        test_subsystem_average_entropy()
        test_state_validation()
        test_state_json_preserves_complex_data()
        test_ground_state_sampling_converges()

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
