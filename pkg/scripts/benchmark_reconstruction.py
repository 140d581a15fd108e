#!/usr/bin/env python3
"""
Reconstruction benchmark across a detuning sweep

For every selected checkpoint of the configured sweep this script:
1. Computes the exact state (ground state, unitary or Lindblad, per config)
2. Samples a clean dataset and a corrupted copy
3. Trains a two-layer RBM on the clean data, and two- and three-layer RBMs
   on the corrupted data (the three-layer model may assume rates that
   differ from the corrupting ones)
4. Records full and subsystem-averaged fidelities to the exact state

Repeating with several --n-hidden values gives the hidden-unit scaling.

    python scripts/benchmark_reconstruction.py --config configs/default_n8.json
    python scripts/benchmark_reconstruction.py --assumed-p01 0.02 --checkpoints 15
"""

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd
import torch
from dotenv import load_dotenv

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

load_dotenv()

from rydberg_rbm.noise.channel import NoiseModel, corrupt_dataset
from rydberg_rbm.pipeline.artifacts import write_csv
from rydberg_rbm.pipeline.commands import checkpoint_states
from rydberg_rbm.pipeline.experiment import (
    SEED_DATASET,
    SEED_NOISE,
    SEED_TRAIN,
    ExperimentConfig,
    derive_seed,
)
from rydberg_rbm.quantum.measurement import sample_measurements
from rydberg_rbm.quantum.states import QuantumState, fidelity, subsystem_avg_fidelity
from rydberg_rbm.settings import get_settings
from rydberg_rbm.training.trainer import train

logger = logging.getLogger("benchmark_reconstruction")


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Two- vs three-layer reconstruction fidelities over a sweep")
    parser.add_argument("--config", type=Path, default=project_root / "configs" / "default_n8.json")
    parser.add_argument("--checkpoints", type=str, default=None,
                        help="Comma-separated checkpoint numbers (1-based); default all")
    parser.add_argument("--n-hidden", type=str, default=None,
                        help="Comma-separated hidden-unit counts; default from config")
    parser.add_argument("--epochs", type=int, default=None, help="Override train.epochs")
    parser.add_argument("--p10", type=float, default=None, help="Corrupting P(1|0); default config noise")
    parser.add_argument("--p01", type=float, default=None, help="Corrupting P(0|1); default config noise")
    parser.add_argument("--assumed-p10", type=float, default=None, help="P(1|0) assumed by the noise layer")
    parser.add_argument("--assumed-p01", type=float, default=None, help="P(0|1) assumed by the noise layer")
    parser.add_argument("--threads", type=int, default=0, help="Worker processes (0 = auto)")
    parser.add_argument("--out", type=Path, default=None, help="CSV path; default <output_dir>/benchmark.csv")
    parser.add_argument("--quiet", action="store_true")
    return parser.parse_args(argv)


def _int_list(text: Optional[str]) -> Optional[List[int]]:
    return [int(x) for x in text.split(",")] if text else None


def benchmark_checkpoint(cfg_data: Dict[str, Any], k: int, truth: QuantumState, hidden: List[int],
                         corrupting: NoiseModel, assumed: NoiseModel) -> List[Dict[str, Any]]:
    """All model variants for one checkpoint; module-level so worker processes can run it"""
    torch.set_num_threads(1)
    cfg = ExperimentConfig.from_dict(cfg_data)
    t = cfg.sweep.checkpoints[k - 1]
    clean = sample_measurements(truth, cfg.n_samples, derive_seed(cfg.seed, k, SEED_DATASET))
    noisy = corrupt_dataset(clean, corrupting, derive_seed(cfg.seed, k, SEED_NOISE))
    variants = [("clean", "two-layer", clean, None),
                ("noisy", "two-layer", noisy, None),
                ("noisy", "three-layer", noisy, assumed)]

    rows = []
    for n_hidden in hidden:
        for data_label, model_label, dataset, nm in variants:
            train_cfg = replace(cfg.train_config(seed=derive_seed(cfg.seed, k, SEED_TRAIN)),
                                n_hidden=n_hidden, noise=nm)
            report = train(dataset, train_cfg)
            reconstructed = report.machine().to_state()
            row = {
                "t_us": t,
                "delta_MHz": cfg.sweep.delta(t),
                "n_hidden": n_hidden,
                "data": data_label,
                "model": model_label,
                "fidelity": fidelity(reconstructed, truth),
                "final_nll": report.history[-1].nll,
            }
            for s in (1, 2, 3):
                if s <= truth.n_sites:
                    row[f"subsystem_fidelity_s{s}"] = subsystem_avg_fidelity(reconstructed, truth, s)
            rows.append(row)
            logger.info(f"t={t:.3f} Nh={n_hidden} {data_label}/{model_label}: F={row['fidelity']:.4f}")
    return rows


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s: %(message)s")

    cfg = ExperimentConfig.load(args.config)
    if args.epochs is not None:
        data = dict(cfg.data)
        data["train"] = {**data["train"], "epochs": args.epochs}
        cfg = ExperimentConfig.from_dict(data)

    base = cfg.noise or NoiseModel.measured()
    corrupting = NoiseModel(p10=args.p10 if args.p10 is not None else base.p10,
                            p01=args.p01 if args.p01 is not None else base.p01)
    assumed = NoiseModel(p10=args.assumed_p10 if args.assumed_p10 is not None else corrupting.p10,
                         p01=args.assumed_p01 if args.assumed_p01 is not None else corrupting.p01)
    ks = _int_list(args.checkpoints) or list(range(1, len(cfg.sweep.checkpoints) + 1))
    hidden = _int_list(args.n_hidden) or [cfg.train_config().hidden_units(cfg.n_sites)]

    print("=" * 60)
    print("RECONSTRUCTION BENCHMARK")
    print("=" * 60)
    print(f"  {cfg!r}")
    print(f"  Checkpoints: {ks}")
    print(f"  Hidden units: {hidden}")
    print(f"  Corrupting rates: p10={corrupting.p10}, p01={corrupting.p01}")
    print(f"  Assumed rates:    p10={assumed.p10}, p01={assumed.p01}")
    print()

    states = checkpoint_states(cfg, args.threads)
    workers = min(get_settings().resolved_threads(args.threads), len(ks))
    jobs = [(cfg.data, k, states[k - 1], hidden, corrupting, assumed) for k in ks]
    if workers <= 1:
        results = [benchmark_checkpoint(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(benchmark_checkpoint, *zip(*jobs)))

    frame = pd.DataFrame([row for rows in results for row in rows])
    out = args.out or cfg.output_dir / "benchmark.csv"
    write_csv(out, frame, "benchmark_reconstruction", cfg.config_hash, cfg.seed)

    print("=" * 60)
    print("RESULTS")
    print("=" * 60)
    summary = frame.pivot_table(index=["delta_MHz", "n_hidden"], columns=["data", "model"], values="fidelity")
    print(summary.to_string(float_format=lambda x: f"{x:.4f}"))
    print()
    print(f"✅ Wrote {len(frame)} rows to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
