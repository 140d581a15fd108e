#!/usr/bin/env python3
"""
Reconstruction quality vs decoherence strength

Scales both jump rates of the configured Lindblad model by each alpha,
evolves the disorder-averaged end-of-sweep state, trains an RBM on its
(optionally corrupted) measurements and records:
- full Uhlmann fidelity and purity of the truth
- subsystem-averaged fidelities for windows s = 1..3
- the window-averaged Renyi-2 entropy of the truth for the same windows

    python scripts/decoherence_study.py --config configs/lindblad_n8.json --alphas 0,1,2,4
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

import pandas as pd
from dotenv import load_dotenv

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

load_dotenv()

from rydberg_rbm.noise.channel import corrupt_dataset
from rydberg_rbm.pipeline.artifacts import write_csv
from rydberg_rbm.pipeline.experiment import (
    SEED_DATASET,
    SEED_DISORDER,
    SEED_NOISE,
    SEED_TRAIN,
    ExperimentConfig,
    derive_seed,
)
from rydberg_rbm.quantum.lindblad import evolve_disorder_averaged
from rydberg_rbm.quantum.measurement import sample_measurements
from rydberg_rbm.quantum.states import (
    QuantumState,
    fidelity,
    purity,
    subsystem_avg_fidelity,
    subsystem_avg_renyi2,
)
from rydberg_rbm.training.trainer import train

logger = logging.getLogger("decoherence_study")

WINDOWS = (1, 2, 3)


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Subsystem fidelity vs decoherence strength")
    parser.add_argument("--config", type=Path, default=project_root / "configs" / "lindblad_n8.json")
    parser.add_argument("--alphas", type=str, default="0,0.5,1,2,4", help="Comma-separated rate multipliers")
    parser.add_argument("--n-disorder", type=int, default=None, help="Override lindblad.n_disorder")
    parser.add_argument("--epochs", type=int, default=None, help="Override train.epochs")
    parser.add_argument("--no-noise-layer", action="store_true", help="Train two-layer models only")
    parser.add_argument("--threads", type=int, default=0, help="Worker processes for disorder averaging")
    parser.add_argument("--out", type=Path, default=None, help="CSV path; default <output_dir>/decoherence.csv")
    parser.add_argument("--quiet", action="store_true")
    return parser.parse_args(argv)


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s: %(message)s")

    cfg = ExperimentConfig.load(args.config)
    hp, sweep = cfg.hamiltonian, cfg.sweep
    lp = cfg.lindblad
    if args.n_disorder is not None:
        lp = replace(lp, n_disorder=args.n_disorder)
    train_cfg = cfg.train_config(seed=derive_seed(cfg.seed, 0, SEED_TRAIN))
    if args.epochs is not None:
        train_cfg = replace(train_cfg, epochs=args.epochs)
    if args.no_noise_layer:
        train_cfg = replace(train_cfg, noise=None)
    alphas = [float(a) for a in args.alphas.split(",")]

    print("=" * 60)
    print("DECOHERENCE STUDY")
    print("=" * 60)
    print(f"  {cfg!r}")
    print(f"  Base rates: gamma_rg={lp.gamma_rg}, gamma_gg={lp.gamma_gg}, Doppler rms={lp.doppler_rms} MHz")
    print(f"  Alphas: {alphas}, realizations: {lp.n_disorder}")
    print(f"  Noise layer: {train_cfg.noise}")
    print()

    initial = QuantumState.basis(hp.n_sites, 0)
    rows = []
    for alpha in alphas:
        truth = evolve_disorder_averaged(initial, sweep, hp, lp.scaled(alpha),
                                         seed=derive_seed(cfg.seed, 0, SEED_DISORDER), threads=args.threads,
                                         dt=cfg.dt, angular=cfg.angular_units)[-1]
        d = sample_measurements(truth, cfg.n_samples, derive_seed(cfg.seed, 0, SEED_DATASET),
                                sweep_time=sweep.total_time)
        if cfg.noise is not None:
            d = corrupt_dataset(d, cfg.noise, derive_seed(cfg.seed, 0, SEED_NOISE))
        reconstructed = train(d, train_cfg).machine().to_state()

        row = {"alpha": alpha, "purity": purity(truth), "fidelity": fidelity(reconstructed, truth)}
        for s in WINDOWS:
            if s <= hp.n_sites:
                row[f"subsystem_fidelity_s{s}"] = subsystem_avg_fidelity(reconstructed, truth, s)
                row[f"avg_renyi2_s{s}"] = subsystem_avg_renyi2(truth, s)
        rows.append(row)
        logger.info(f"alpha={alpha}: purity={row['purity']:.4f}, F={row['fidelity']:.4f}")

    frame = pd.DataFrame(rows)
    out = args.out or cfg.output_dir / "decoherence.csv"
    write_csv(out, frame, "decoherence_study", cfg.config_hash, cfg.seed)

    print("=" * 60)
    print("RESULTS")
    print("=" * 60)
    print(frame.to_string(index=False, float_format=lambda x: f"{x:.4f}"))
    print()
    print(f"✅ Wrote {len(frame)} rows to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
