"""
Command-line interface

    python main.py generate --config configs/default_n8.json
    python main.py corrupt  --dataset runs/n8/t15/dataset.txt --p10 0.01 --p01 0.04
    python main.py train    --dataset runs/n8/t15/dataset_noisy.txt --config configs/default_n8.json
    python main.py evaluate --model runs/n8/t15/model.json --dataset ... --state ...
    python main.py sweep    --config configs/default_n8.json --threads 4
    python main.py report   --out runs/n8

Exit codes: 0 success, 2 config error, 3 numeric failure, 4 provenance mismatch.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from rydberg_rbm.exceptions import (
    ConfigError,
    EstimatorError,
    IntegrationError,
    ProvenanceError,
    ResourceLimitError,
    TrainingDivergedError,
)
from rydberg_rbm.noise.channel import NoiseModel
from rydberg_rbm.pipeline.commands import (
    cmd_corrupt,
    cmd_evaluate,
    cmd_generate,
    cmd_report,
    cmd_sweep,
    cmd_train,
)
from rydberg_rbm.pipeline.experiment import SEED_NOISE, ExperimentConfig, derive_seed
from rydberg_rbm.settings import get_settings

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_PROVENANCE = 4

NUMERIC_ERRORS = (IntegrationError, TrainingDivergedError, EstimatorError, ResourceLimitError)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="Experiment config (JSON)")
    common.add_argument("--seed", type=int, default=None, help="Override the master seed")
    common.add_argument("--out", type=Path, default=None, help="Output directory")
    common.add_argument("--threads", type=int, default=0, help="Worker processes (0 = auto)")
    common.add_argument("--quiet", action="store_true", help="Only warnings and errors")

    parser = argparse.ArgumentParser(
        prog="rydberg-rbm",
        description="Reconstruct Rydberg-chain states with RBMs from synthetic measurements",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("generate", parents=[common], help="Exact states and datasets for every checkpoint")

    p = sub.add_parser("corrupt", parents=[common], help="Apply the bit-flip channel to a dataset file")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--p10", type=float, default=None, help="P(record 1 | true 0)")
    p.add_argument("--p01", type=float, default=None, help="P(record 0 | true 1)")

    p = sub.add_parser("train", parents=[common], help="Train an RBM on a dataset file")
    p.add_argument("--dataset", type=Path, required=True)

    p = sub.add_parser("evaluate", parents=[common], help="Observables and fidelities of a trained model")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--dataset", type=Path, default=None, help="Training data (enables the FD baseline)")
    p.add_argument("--state", type=Path, default=None, help="Exact state file (enables fidelities)")

    sub.add_parser("sweep", parents=[common], help="generate + train + evaluate + report")
    sub.add_parser("report", parents=[common], help="Merge checkpoint results into report tables")
    return parser


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config is not None else ExperimentConfig.from_dict({})
    return cfg.with_overrides(seed=args.seed, output_dir=str(args.out) if args.out is not None else None)


def _banner(args, title: str, lines: List[str]) -> None:
    if args.quiet:
        return
    print("=" * 60)
    print(title)
    print("=" * 60)
    for line in lines:
        print(f"  {line}")
    print()


def _run(args) -> None:
    if args.command == "generate":
        cfg = _load_config(args)
        _banner(args, "GENERATE", [repr(cfg), f"Output: {cfg.output_dir}"])
        dirs = cmd_generate(cfg, args.threads)
        _banner(args, "DONE", [f"{len(dirs)} checkpoints written"])

    elif args.command == "corrupt":
        cfg = _load_config(args) if args.config is not None else None
        base = cfg.noise if cfg is not None and cfg.noise is not None else NoiseModel.measured()
        nm = NoiseModel(p10=args.p10 if args.p10 is not None else base.p10,
                        p01=args.p01 if args.p01 is not None else base.p01)
        seed = args.seed if args.seed is not None else derive_seed(cfg.seed if cfg else 0, 0, SEED_NOISE)
        out_base = args.out / "dataset_noisy" if args.out is not None else None
        target = cmd_corrupt(args.dataset, nm, seed, out_base)
        _banner(args, "CORRUPT", [f"p10={nm.p10}, p01={nm.p01}, seed={seed}", f"Wrote {target.body_path}"])

    elif args.command == "train":
        cfg = _load_config(args)
        out = args.out if args.out is not None else args.dataset.parent
        train_cfg = cfg.train_config()
        _banner(args, "TRAIN", [f"Dataset: {args.dataset}", f"Noise layer: {train_cfg.noise}"])
        report = cmd_train(args.dataset, train_cfg, out,
                           expected_hash=cfg.config_hash if args.config is not None else None,
                           master_seed=cfg.seed)
        last = report.history[-1]
        _banner(args, "DONE", [f"Final NLL: {last.nll}", f"Validation NLL: {last.val_nll}",
                               f"Wall time: {report.wall_time:.1f}s"])

    elif args.command == "evaluate":
        cfg = _load_config(args)
        out = args.out if args.out is not None else args.model.parent
        seed = args.seed if args.seed is not None else cfg.seed
        summary = cmd_evaluate(args.model, cfg.evaluate, out, seed=seed, dataset_path=args.dataset,
                               state_path=args.state, noise=cfg.noise)
        fids = summary.get("fidelities", {})
        _banner(args, "EVALUATE", [f"{k}: {v}" for k, v in fids.items() if k.startswith("fidelity")])

    elif args.command == "sweep":
        cfg = _load_config(args)
        _banner(args, "SWEEP", [repr(cfg), f"Output: {cfg.output_dir}"])
        summary = cmd_sweep(cfg, args.threads)
        _banner(args, "DONE", [f"Report rows: {summary['n_rows']}"])

    elif args.command == "report":
        directory = args.out if args.out is not None else _load_config(args).output_dir
        summary = cmd_report(directory)
        _banner(args, "REPORT", [f"{summary['n_rows']} rows, hash {summary['config_hash']}"])


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one command and map failures to exit codes"""
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.quiet else getattr(logging, get_settings().log_level, logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s")

    try:
        _run(args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except NUMERIC_ERRORS as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_NUMERIC
    except ProvenanceError as e:
        logger.error(f"Provenance mismatch: {e}")
        return EXIT_PROVENANCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
