"""
Test two- and three-layer RBM training

Exact NLL gradients are checked against finite differences, the CD-k
estimate against the exact gradient, and the trainer for determinism,
divergence handling and convergence on a trivial dataset.
"""

import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
import torch

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from rydberg_rbm.bits import configuration
from rydberg_rbm.dataset import Dataset
from rydberg_rbm.exceptions import TrainingDivergedError
from rydberg_rbm.noise.channel import NoiseModel
from rydberg_rbm.rbm.machine import RBM
from rydberg_rbm.training.trainer import (
    EpochRecord,
    TrainConfig,
    TrainReport,
    _validation_grew,
    cd_gradient,
    grad_exact,
    nll_exact,
    snapshot_spread,
    train,
    train_resplits,
)

MEASURED = NoiseModel.measured()


def random_rbm(n_visible, n_hidden, seed, scale=0.5):
    rng = np.random.default_rng(seed)
    return RBM.from_arrays(rng.normal(0, scale, (n_hidden, n_visible)), rng.normal(0, scale, n_visible),
                           rng.normal(0, scale, n_hidden))


def random_dataset(n_sites, n_samples, seed):
    return Dataset(np.random.default_rng(seed).integers(0, 2, (n_samples, n_sites)).astype(np.uint8), seed=seed)


def finite_difference_gradient(machine, data, nm, step=1e-5):
    arrays = machine.arrays()
    grads = {}
    for name, value in arrays.items():
        g = np.zeros_like(value)
        for idx in np.ndindex(value.shape):
            shifted = {k: v.copy() for k, v in arrays.items()}
            shifted[name][idx] += step
            plus = nll_exact(RBM.from_arrays(**shifted), data, nm)
            shifted[name][idx] -= 2 * step
            minus = nll_exact(RBM.from_arrays(**shifted), data, nm)
            g[idx] = (plus - minus) / (2 * step)
        grads[name] = g
    return grads


def test_uniform_machine_nll():
    """Zero parameters assign log 2 nats per site to any dataset"""
    machine = RBM(5, 4, init_std=0.0)
    d = random_dataset(5, 300, seed=1)
    assert abs(nll_exact(machine, d) - 5 * np.log(2)) < 1e-12
    assert abs(nll_exact(machine, d, NoiseModel()) - 5 * np.log(2)) < 1e-12
    print("  ✓ PASS: uniform NLL\n")


def test_exact_gradient_matches_finite_differences():
    """Both likelihoods: autograd gradient vs central differences"""
    print("\n" + "=" * 70)
    print("TEST: Exact gradient vs finite differences")
    print("=" * 70)

    d = random_dataset(3, 200, seed=2)
    for trial in range(5):
        machine = random_rbm(3, 3, seed=10 + trial)
        for nm in (None, MEASURED):
            exact = grad_exact(machine, d, nm)
            numeric = finite_difference_gradient(machine, d, nm)
            err = max(np.max(np.abs(exact[k] - numeric[k])) for k in exact)
            assert err < 1e-6, f"trial {trial}, noise={nm}: max error {err}"
        print(f"  trial {trial}: OK")

    print("  ✓ PASS\n")


def test_gradient_vanishes_at_matching_distribution():
    machine = random_rbm(4, 3, seed=3)
    target = machine.probability_table()
    grads = grad_exact(machine, target)
    norm = np.sqrt(sum(np.sum(g**2) for g in grads.values()))
    assert norm < 1e-10, f"Gradient norm {norm} at the fixed point"


def test_zero_rate_noise_equals_two_layer():
    machine = random_rbm(3, 4, seed=4)
    d = random_dataset(3, 100, seed=4)
    plain = grad_exact(machine, d)
    zero = grad_exact(machine, d, NoiseModel())
    for name in plain:
        assert np.max(np.abs(plain[name] - zero[name])) < 1e-12
    assert nll_exact(machine, d) == nll_exact(machine, d, NoiseModel())


def test_exact_gradient_descent_is_monotone():
    machine = random_rbm(3, 3, seed=5)
    d = random_dataset(3, 100, seed=5)
    previous = nll_exact(machine, d)
    for _ in range(100):
        grads = grad_exact(machine, d)
        arrays = machine.arrays()
        machine.load_arrays({k: arrays[k] - 1e-2 * grads[k] for k in arrays})
        current = nll_exact(machine, d)
        assert current <= previous + 1e-9
        previous = current
    print("  ✓ PASS: monotone descent\n")


def test_cd_gradient_converges_to_exact():
    """With k = 1000 sweeps and 10^5 chains CD matches the exact gradient to 0.01"""
    print("\n" + "=" * 70)
    print("TEST: CD-k gradient vs exact gradient")
    print("=" * 70)

    machine = random_rbm(3, 3, seed=6)
    records = random_dataset(3, 20, seed=6).bits
    batch = np.tile(records, (5000, 1))
    target = Dataset(batch)
    exact = grad_exact(machine, target)
    cd = cd_gradient(machine, batch, k=1000, seed=1)
    err = max(np.max(np.abs(exact[k] - cd[k])) for k in exact)
    print(f"  max |CD - exact| = {err:.4f}")
    assert err < 0.01

    again = cd_gradient(machine, batch[:100], k=3, seed=4)
    repeat = cd_gradient(machine, batch[:100], k=3, seed=4)
    assert all(np.array_equal(again[k], repeat[k]) for k in again)
    print("  ✓ PASS\n")


def test_cd_gradient_rejects_empty_batch():
    with pytest.raises(ValueError):
        cd_gradient(RBM(3, 2), np.zeros((0, 3), dtype=np.uint8), k=1)


def small_config(**changes):
    cfg = TrainConfig(n_hidden=3, learning_rate=0.05, batch_size=50, cd_steps=2, epochs=3, seed=7,
                      log_every=0, n_final_snapshots=2)
    return replace(cfg, **changes)


def test_training_is_deterministic():
    d = random_dataset(3, 200, seed=8)
    for nm in (None, MEASURED):
        first = train(d, small_config(noise=nm))
        second = train(d, small_config(noise=nm))
        for name, value in first.final.items():
            assert np.array_equal(value, second.final[name]), f"{name} differs between runs"
        assert [r.nll for r in first.history] == [r.nll for r in second.history]
    print("  ✓ PASS: deterministic under seed\n")


def test_zero_rate_noise_layer_is_bit_identical_to_two_layer():
    """CD gradients and whole runs with a zero-rate channel equal the plain machine bit for bit"""
    machine = random_rbm(3, 4, seed=12)
    batch = random_dataset(3, 64, seed=12).bits
    zero_rates = (NoiseModel(), NoiseModel(p10_sites=(0.0,) * 3, p01_sites=(0.0,) * 3))
    for seed in (0, 1, 2):
        plain = cd_gradient(machine, batch, k=5, seed=seed)
        for nm in zero_rates:
            layered = cd_gradient(machine, batch, k=5, nm=nm, seed=seed)
            for name in plain:
                assert np.array_equal(plain[name], layered[name]), f"{name} differs for {nm} (seed {seed})"

    d = random_dataset(3, 200, seed=12)
    two_layer = train(d, small_config(noise=None))
    three_layer = train(d, small_config(noise=NoiseModel()))
    for name, value in two_layer.final.items():
        assert np.array_equal(value, three_layer.final[name]), f"{name} differs after training"
    print("  ✓ PASS: zero-rate noise layer\n")


def test_training_report_contents():
    d = random_dataset(3, 200, seed=9)
    report = train(d, small_config(epochs=4, snapshot_every=1))
    assert [r.epoch for r in report.history] == [1, 2, 3, 4]
    assert all(r.nll is not None and r.val_nll is not None for r in report.history)
    lrs = [r.lr for r in report.history]
    assert np.allclose(lrs, [0.05 * 0.998**e for e in range(4)])
    # periodic snapshots cover every epoch, the final ones are not duplicated
    assert [e for e, _ in report.snapshots] == [1, 2, 3, 4]

    curve = report.training_curve()
    assert list(curve.columns) == ["epoch", "nll", "val_nll", "grad_norm", "lr"]
    assert len(curve) == 4

    restored = TrainReport.from_dict(report.to_dict())
    assert np.array_equal(restored.machine().arrays()["weights"], report.final["weights"])


def test_training_concentrates_on_single_configuration():
    """A dataset of one repeated string is learned as a peaked distribution"""
    print("\n" + "=" * 70)
    print("TEST: Training on a single configuration")
    print("=" * 70)

    d = Dataset.from_strings(["101"] * 500)
    cfg = TrainConfig(n_hidden=3, learning_rate=0.05, batch_size=100, cd_steps=5, epochs=200,
                      seed=1, log_every=0, validation_split=0.0)
    report = train(d, cfg)
    probs = report.machine().probability_table()
    print(f"  p(101) = {probs[configuration('101')]:.4f}")
    print(f"  final NLL = {report.history[-1].nll:.4f}")
    assert int(np.argmax(probs)) == configuration("101")
    assert probs[configuration("101")] > 0.5
    assert report.history[-1].nll < report.history[0].nll
    print("  ✓ PASS\n")


def test_divergence_raises_with_last_finite_parameters():
    d = random_dataset(3, 50, seed=10)
    cfg = small_config(learning_rate=float("inf"), batch_size=100, validation_split=0.0)
    with pytest.raises(TrainingDivergedError) as info:
        train(d, cfg)
    assert info.value.epoch == 1
    snapshot = info.value.snapshot
    assert snapshot is not None and all(np.all(np.isfinite(v)) for v in snapshot.values())


def test_validation_growth_flagged():
    def history(values):
        return [EpochRecord(i + 1, 1.0, v, 0.1, 0.05) for i, v in enumerate(values)]

    assert not _validation_grew(history([2.0, 1.5, 1.2, 1.1, 1.0, 1.0, 0.99, 0.98]), 0.01)
    assert _validation_grew(history([2.0, 1.5, 1.2, 1.1, 1.0, 1.0, 1.05, 1.2]), 0.01)
    assert not _validation_grew(history([1.0]), 0.01)


def test_resplits_and_snapshot_spread():
    d = random_dataset(3, 200, seed=11)
    reports = train_resplits(d, small_config(epochs=2), n_resplits=2)
    assert len(reports) == 2
    assert reports[0].config.seed != reports[1].config.seed
    mean, std = snapshot_spread(reports, lambda m: float(m.probability_table()[0]))
    assert 0.0 < mean < 1.0 and std >= 0.0
    with pytest.raises(ValueError):
        snapshot_spread([], lambda m: 0.0)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        TrainConfig(lr_decay=1.5)
    with pytest.raises(ValueError):
        TrainConfig(validation_split=1.0)
    cfg = TrainConfig(noise={"p10": 0.01, "p01": 0.04})
    assert cfg.noise == MEASURED
    assert cfg.hidden_units(8) == 16
    assert TrainConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        train(Dataset(np.zeros((0, 3), dtype=np.uint8)), TrainConfig(epochs=1))


if __name__ == "__main__":
    print("=" * 70)
    print("Testing RBM training")
    print("=" * 70)
    print()

    try:
        torch.set_num_threads(1)
        test_uniform_machine_nll()
        test_exact_gradient_matches_finite_differences()
        test_gradient_vanishes_at_matching_distribution()
        test_zero_rate_noise_equals_two_layer()
        test_exact_gradient_descent_is_monotone()
        test_cd_gradient_converges_to_exact()
        test_cd_gradient_rejects_empty_batch()
        test_training_is_deterministic()
        test_zero_rate_noise_layer_is_bit_identical_to_two_layer()
        test_training_report_contents()
        test_training_concentrates_on_single_configuration()
        test_divergence_raises_with_last_finite_parameters()
        test_validation_growth_flagged()
        test_resplits_and_snapshot_spread()
        test_config_validation()

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
