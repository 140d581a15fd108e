#!/usr/bin/env python3
"""
Frequency-distribution baseline vs RBM as the chain grows

For each chain length and dataset size, samples the exact ground state near
the ordering transition, then compares:
- FD fidelity and its sqrt(N_s) exp(-H2/4) upper bound
- RBM fidelity after two-layer training
- Model sizes (distinct strings vs N*N_h + N + N_h)

Chains above the dense-diagonalization size use the Lanczos ground state.

    python scripts/fd_vs_rbm_scaling.py --sizes 8,12,16 --samples 1000,10000
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import pandas as pd
from dotenv import load_dotenv

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

load_dotenv()

from rydberg_rbm.baseline.frequency import (
    build_fd,
    distribution_renyi2,
    fd_state_fidelity,
    fidelity_bound,
    model_size,
)
from rydberg_rbm.pipeline.artifacts import write_csv
from rydberg_rbm.pipeline.experiment import SEED_DATASET, SEED_TRAIN, derive_seed
from rydberg_rbm.quantum.hamiltonian import chain_ground_state
from rydberg_rbm.quantum.measurement import sample_measurements
from rydberg_rbm.quantum.params import HamiltonianParams
from rydberg_rbm.quantum.states import fidelity
from rydberg_rbm.training.trainer import TrainConfig, train

logger = logging.getLogger("fd_vs_rbm_scaling")


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="FD vs RBM fidelity and model size across chain lengths")
    parser.add_argument("--sizes", type=str, default="8,12,16", help="Comma-separated chain lengths")
    parser.add_argument("--samples", type=str, default="1000,10000", help="Comma-separated dataset sizes")
    parser.add_argument("--v-nn", type=float, default=30.0)
    parser.add_argument("--omega", type=float, default=2.0)
    parser.add_argument("--delta", type=float, default=2.0, help="Detuning (MHz), near the Z2 transition")
    parser.add_argument("--cutoff", type=int, default=2, help="Interaction range in sites")
    parser.add_argument("--hidden-ratio", type=float, default=1.0, help="N_h = ratio * N")
    parser.add_argument("--epochs", type=int, default=500)
    parser.add_argument("--cd-steps", type=int, default=10)
    parser.add_argument("--seed", type=int, default=1234)
    parser.add_argument("--out", type=Path, default=Path("runs/fd_vs_rbm_scaling.csv"))
    parser.add_argument("--quiet", action="store_true")
    return parser.parse_args(argv)


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s: %(message)s")
    sizes = [int(x) for x in args.sizes.split(",")]
    sample_sizes = [int(x) for x in args.samples.split(",")]

    print("=" * 60)
    print("FD VS RBM SCALING")
    print("=" * 60)
    print(f"  Chain lengths: {sizes}")
    print(f"  Dataset sizes: {sample_sizes}")
    print(f"  V={args.v_nn}, Omega={args.omega}, Delta={args.delta} MHz, cutoff={args.cutoff}")
    print()

    rows = []
    for n in sizes:
        truth = chain_ground_state(HamiltonianParams(n, args.v_nn, args.omega, args.delta, args.cutoff))
        h2 = distribution_renyi2(truth.probabilities())
        n_hidden = max(1, int(round(args.hidden_ratio * n)))
        for n_samples in sample_sizes:
            d = sample_measurements(truth, n_samples, derive_seed(args.seed, n, n_samples, SEED_DATASET))
            fd = build_fd(d)
            cfg = TrainConfig(n_hidden=n_hidden, epochs=args.epochs, cd_steps=args.cd_steps,
                              seed=derive_seed(args.seed, n, n_samples, SEED_TRAIN), log_every=0)
            report = train(d, cfg)
            machine = report.machine()
            row = {
                "n_sites": n,
                "n_samples": n_samples,
                "n_hidden": n_hidden,
                "H2": h2,
                "fidelity_fd": fd_state_fidelity(fd, truth),
                "fd_bound": fidelity_bound(n_samples, h2),
                "fidelity_rbm": fidelity(machine.to_state(), truth),
                "model_size_fd": model_size(fd),
                "model_size_rbm": model_size(machine),
                "train_seconds": report.wall_time,
            }
            rows.append(row)
            logger.info(f"N={n} N_s={n_samples}: F_rbm={row['fidelity_rbm']:.4f} "
                        f"F_fd={row['fidelity_fd']:.4f} (bound {row['fd_bound']:.3f})")

    frame = pd.DataFrame(rows)
    frame["rbm_minus_fd"] = frame["fidelity_rbm"] - frame["fidelity_fd"]
    write_csv(args.out, frame, "fd_vs_rbm_scaling", None, args.seed)

    print("=" * 60)
    print("RESULTS")
    print("=" * 60)
    print(frame[["n_sites", "n_samples", "fidelity_rbm", "fidelity_fd", "fd_bound",
                 "model_size_rbm", "model_size_fd"]].to_string(index=False, float_format=lambda x: f"{x:.4f}"))
    print()
    print(f"✅ Wrote {len(frame)} rows to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
