"""
Pipeline commands

Thin, deterministic wrappers that move artifacts between the library layers:
generate -> (corrupt) -> train -> evaluate, repeated per sweep checkpoint by
sweep, and merged into tidy tables by report. All seeds derive from the
config's master seed and the checkpoint number, so worker count never changes
the output.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd
import torch

from rydberg_rbm.baseline.frequency import (
    build_fd,
    distribution_renyi2,
    fd_state_fidelity,
    fidelity_bound,
    model_size,
)
from rydberg_rbm.dataset import Dataset
from rydberg_rbm.estimators.observables import (
    DiagonalObservable,
    avg_correlator,
    avg_transverse_field,
    avg_xx_correlator,
    forward_noise,
    mutual_information_rbm,
    transverse_profile,
    xx_connected,
)
from rydberg_rbm.exceptions import ProvenanceError, TrainingDivergedError
from rydberg_rbm.noise.channel import NoiseModel, corrupt_dataset
from rydberg_rbm.pipeline.artifacts import (
    DatasetFile,
    check_provenance,
    read_csv,
    read_json,
    read_model,
    read_state,
    write_csv,
    write_json,
    write_state,
)
from rydberg_rbm.pipeline.experiment import (
    SEED_DATASET,
    SEED_DISORDER,
    SEED_EVALUATE,
    SEED_NOISE,
    SEED_TRAIN,
    EvaluateConfig,
    ExperimentConfig,
    derive_seed,
)
from rydberg_rbm.quantum.hamiltonian import chain_ground_state
from rydberg_rbm.quantum.lindblad import evolve_disorder_averaged, evolve_unitary
from rydberg_rbm.quantum.measurement import sample_measurements
from rydberg_rbm.quantum.states import (
    QuantumState,
    fidelity,
    mutual_information_exact,
    subsystem_avg_fidelity,
)
from rydberg_rbm.rbm.machine import RBM
from rydberg_rbm.settings import get_settings
from rydberg_rbm.training.trainer import TrainConfig, TrainReport, train

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["t_us", "delta_MHz", "model", "observable", "sites", "bond",
                  "value", "std_error", "method", "n_samples", "seed"]


def checkpoint_dir(out: Path, k: int) -> Path:
    return Path(out) / f"t{k:02d}"


def write_config(cfg: ExperimentConfig) -> Path:
    """
    Record the resolved config in the output directory

    Raises:
        ProvenanceError: if the directory already holds another config's artifacts
    """
    path = cfg.output_dir / "config.json"
    if path.exists():
        existing = read_json(path).get("config_hash")
        if existing != cfg.config_hash:
            raise ProvenanceError(f"{cfg.output_dir} holds artifacts of config {existing}, "
                                  f"not {cfg.config_hash}; choose another --out")
    write_json(path, cfg.to_json())
    return path


def checkpoint_states(cfg: ExperimentConfig, threads: int = 0) -> List[QuantumState]:
    """Exact states at every sweep checkpoint for the configured mode"""
    hp, sweep = cfg.hamiltonian, cfg.sweep
    if cfg.mode == "ground_state":
        omega = cfg.ground_state_omega
        logger.info(f"Ground states at {len(sweep.checkpoints)} detunings (Omega={omega} MHz)")
        return [chain_ground_state(hp.with_drive(omega, sweep.delta(t)))
                for t in sweep.checkpoints]
    initial = QuantumState.basis(hp.n_sites, 0)
    if cfg.mode == "unitary":
        return evolve_unitary(initial, sweep, hp, dt=cfg.dt, angular=cfg.angular_units)
    return evolve_disorder_averaged(initial, sweep, hp, cfg.lindblad,
                                    seed=derive_seed(cfg.seed, 0, SEED_DISORDER),
                                    threads=threads, dt=cfg.dt, angular=cfg.angular_units)


def cmd_generate(cfg: ExperimentConfig, threads: int = 0) -> List[Path]:
    """
    Exact checkpoint states plus clean (and corrupted) datasets

    Returns:
        The checkpoint directories, in sweep order
    """
    write_config(cfg)
    sweep = cfg.sweep
    states = checkpoint_states(cfg, threads)
    dirs = []
    for k, (t, state) in enumerate(zip(sweep.checkpoints, states), start=1):
        cdir = checkpoint_dir(cfg.output_dir, k)
        omega = cfg.ground_state_omega if cfg.mode == "ground_state" else sweep.omega(t)
        info = {"checkpoint": k, "sweep_time": t, "delta_MHz": sweep.delta(t), "omega_MHz": omega,
                "mode": cfg.mode}
        write_state(cdir / "state.json", state, cfg.config_hash, cfg.seed, **info)

        clean = sample_measurements(state, cfg.n_samples, derive_seed(cfg.seed, k, SEED_DATASET),
                                    source=f"{cfg.mode} state at t={t:.4g} us", sweep_time=t)
        clean = replace(clean, config_hash=cfg.config_hash, extra=dict(info))
        DatasetFile(cdir / "dataset", cfg.gzip).write(clean)
        if cfg.noise is not None:
            noisy = corrupt_dataset(clean, cfg.noise, derive_seed(cfg.seed, k, SEED_NOISE))
            DatasetFile(cdir / "dataset_noisy", cfg.gzip).write(noisy)
        dirs.append(cdir)
    logger.info(f"Generated {len(dirs)} checkpoints under {cfg.output_dir}")
    return dirs


def cmd_corrupt(dataset_path, nm: NoiseModel, seed: int, out_base=None) -> DatasetFile:
    """Pass a dataset file through the bit-flip channel"""
    source = DatasetFile.locate(dataset_path)
    noisy = corrupt_dataset(source.read(), nm, seed)
    target = DatasetFile(out_base if out_base is not None else f"{source.base}_noisy", source.compress)
    target.write(noisy)
    logger.info(f"Corrupted {noisy.n_samples} records into {target.body_path}")
    return target


def cmd_train(dataset_path, train_cfg: TrainConfig, out_dir, expected_hash: Optional[str] = None,
              master_seed: Optional[int] = None) -> TrainReport:
    """
    Train an RBM on a dataset file

    Writes model.json, train_report.json and training_curve.csv to out_dir. On
    divergence the last finite parameters go to model_diverged.json.
    """
    d = DatasetFile.locate(dataset_path).read()
    config_hash = check_provenance([d.config_hash, expected_hash], f"train on {dataset_path}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        report = train(d, train_cfg)
    except TrainingDivergedError as e:
        if e.snapshot is not None:
            RBM.from_arrays(**e.snapshot).save(out_dir / "model_diverged.json", config_hash, master_seed)
        raise

    report.machine().save(out_dir / "model.json", config_hash=config_hash, seed=master_seed)
    write_json(out_dir / "train_report.json",
               {**report.to_dict(), "config_hash": config_hash, "seed": master_seed})
    write_csv(out_dir / "training_curve.csv", report.training_curve(), "training_curve",
              config_hash, master_seed)
    logger.info(f"Trained model saved to {out_dir / 'model.json'} ({report.wall_time:.1f}s)")
    return report


def observable_rows(model, label: str, ev: EvaluateConfig, seed: int) -> List[Dict[str, Any]]:
    """The standard observable set of one wavefunction model"""
    n = model.n_sites
    kw = {"n_mc": ev.n_mc, "seed": seed, "exact": ev.exact}
    results = [avg_correlator(model, s, **kw) for s in ev.distances if 1 <= s <= n - 1]
    results += transverse_profile(model, **kw)
    results.append(avg_transverse_field(model, **kw))
    results += [xx_connected(model, i, **kw) for i in range(n - 1)]
    results.append(avg_xx_correlator(model, **kw))
    results += [mutual_information_rbm(model, s, **kw) for s in ev.resolved_bonds(n)]
    return [{"model": label, **r.to_row()} for r in results]


def _fidelities(machine: RBM, fd, truth: QuantumState, ev: EvaluateConfig,
                n_samples: Optional[int]) -> Dict[str, Any]:
    out: Dict[str, Any] = {"truth_kind": truth.kind, "fidelity_rbm": fidelity(machine.to_state(), truth)}
    for s in ev.subsystem_sizes:
        if 1 <= s <= truth.n_sites:
            out[f"subsystem_fidelity_s{s}"] = subsystem_avg_fidelity(machine.to_state(), truth, s)
    for bond in ev.resolved_bonds(truth.n_sites):
        out[f"truth_I2_s{bond}"] = mutual_information_exact(truth, bond, 2)
    if fd is not None:
        out["fidelity_fd"] = fd_state_fidelity(fd, truth)
        out["fd_positive_partner"] = not truth.is_pure
        out["fd_bound"] = fidelity_bound(n_samples, distribution_renyi2(truth.probabilities()))
    return out


def cmd_evaluate(model_path, ev: EvaluateConfig, out_dir, seed: int = 0, dataset_path=None,
                 state_path=None, noise: Optional[NoiseModel] = None) -> Dict[str, Any]:
    """
    Observables, fidelities and the FD baseline for one trained model

    Writes observables.csv (one row per model/observable, models rbm, fd, data
    and rbm+noise) and evaluation.json.
    """
    machine, meta = read_model(model_path)
    d: Optional[Dataset] = DatasetFile.locate(dataset_path).read() if dataset_path is not None else None
    truth, truth_meta = read_state(state_path) if state_path is not None else (None, {})
    config_hash = check_provenance(
        [meta["config_hash"], d.config_hash if d is not None else None, truth_meta.get("config_hash")],
        f"evaluate {model_path}",
    )
    master_seed = meta["seed"]

    rows = observable_rows(machine, "rbm", ev, seed)
    fd = None
    if d is not None and not d.is_empty():
        if ev.fd_baseline:
            fd = build_fd(d)
            rows += observable_rows(fd, "fd", ev, seed)
        rows += [{"model": "data", **avg_correlator(d, s).to_row()}
                 for s in ev.distances if 1 <= s <= d.n_sites - 1]
    if noise is not None and not noise.is_trivial and ev.forward_noise:
        for s in ev.distances:
            if 1 <= s <= machine.n_sites - 1:
                res = forward_noise(machine, noise, DiagonalObservable("avg_zz", distance=s), ev.n_mc, seed)
                rows.append({"model": "rbm+noise", **res.to_row()})

    summary: Dict[str, Any] = {
        "config_hash": config_hash,
        "seed": master_seed,
        "evaluation_seed": seed,
        "n_sites": machine.n_sites,
        "model_size_rbm": model_size(machine),
        "model_size_fd": model_size(fd) if fd is not None else None,
        "sweep_time": truth_meta.get("sweep_time"),
        "delta_MHz": truth_meta.get("delta_MHz"),
    }
    if truth is not None:
        summary["fidelities"] = _fidelities(machine, fd, truth, ev, d.n_samples if d is not None else None)

    out_dir = Path(out_dir)
    write_csv(out_dir / "observables.csv", pd.DataFrame(rows), "observables", config_hash, master_seed)
    write_json(out_dir / "evaluation.json", summary)
    logger.info(f"Evaluated {len(rows)} observables into {out_dir}")
    return summary


def run_checkpoint(cfg_data: Dict[str, Any], k: int) -> Dict[str, Any]:
    """Train and evaluate one checkpoint; module-level so worker processes can run it"""
    torch.set_num_threads(1)
    cfg = ExperimentConfig.from_dict(cfg_data)
    cdir = checkpoint_dir(cfg.output_dir, k)
    dataset = cdir / ("dataset_noisy" if cfg.noise is not None else "dataset")
    cmd_train(dataset, cfg.train_config(seed=derive_seed(cfg.seed, k, SEED_TRAIN)), cdir,
              expected_hash=cfg.config_hash, master_seed=cfg.seed)
    return cmd_evaluate(cdir / "model.json", cfg.evaluate, cdir, seed=derive_seed(cfg.seed, k, SEED_EVALUATE),
                        dataset_path=dataset, state_path=cdir / "state.json", noise=cfg.noise)


def cmd_sweep(cfg: ExperimentConfig, threads: int = 0) -> Dict[str, Any]:
    """generate, then train + evaluate every checkpoint, then report"""
    dirs = cmd_generate(cfg, threads)
    workers = min(get_settings().resolved_threads(threads), len(dirs))
    logger.info(f"Training {len(dirs)} checkpoints on {workers} worker(s)")
    ks = list(range(1, len(dirs) + 1))
    if workers <= 1:
        for k in ks:
            run_checkpoint(cfg.data, k)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_checkpoint, [cfg.data] * len(ks), ks))
    return cmd_report(cfg.output_dir)


def cmd_report(directory) -> Dict[str, Any]:
    """
    Merge per-checkpoint results into report/observables.csv, fidelities.csv
    and report.json, keyed by sweep time and detuning

    Raises:
        ProvenanceError: if checkpoint artifacts disagree on the config hash
    """
    directory = Path(directory)
    stored = read_json(directory / "config.json")
    cfg = ExperimentConfig.from_dict(stored["config"])
    hashes = [stored.get("config_hash"), cfg.config_hash]
    sweep = cfg.sweep

    frames, fid_rows, missing = [], [], []
    for k, t in enumerate(sweep.checkpoints, start=1):
        cdir = checkpoint_dir(directory, k)
        if not (cdir / "observables.csv").exists():
            missing.append(k)
            continue
        table, meta = read_csv(cdir / "observables.csv")
        evaluation = read_json(cdir / "evaluation.json")
        hashes += [meta.get("config_hash"), evaluation.get("config_hash")]
        table.insert(0, "t_us", t)
        table.insert(1, "delta_MHz", sweep.delta(t))
        frames.append(table)
        fid_rows.append({"t_us": t, "delta_MHz": sweep.delta(t), **evaluation.get("fidelities", {})})
    config_hash = check_provenance(hashes, f"report {directory}")
    if missing:
        logger.warning(f"Checkpoints without evaluation: {missing}")

    report_dir = directory / "report"
    observables = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=REPORT_COLUMNS)
    observables = observables[[c for c in REPORT_COLUMNS if c in observables.columns]]
    write_csv(report_dir / "observables.csv", observables, "report_observables", config_hash, cfg.seed)
    write_csv(report_dir / "fidelities.csv", pd.DataFrame(fid_rows), "report_fidelities", config_hash, cfg.seed)
    summary = {
        "config_hash": config_hash,
        "seed": cfg.seed,
        "mode": cfg.mode,
        "n_sites": cfg.n_sites,
        "checkpoints": list(sweep.checkpoints),
        "missing_checkpoints": missing,
        "n_rows": int(len(observables)),
    }
    write_json(report_dir / "report.json", summary)
    logger.info(f"Report with {len(observables)} rows written to {report_dir}")
    return summary
