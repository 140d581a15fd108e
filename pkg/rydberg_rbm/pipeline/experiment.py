"""
Experiment configuration

A config is a JSON object with the sections below; every key is optional and
falls back to DEFAULT_CONFIG. Unknown keys and invalid values raise
ConfigError naming the key path (and the line for JSON syntax errors).
"""

import copy
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from rydberg_rbm.exceptions import ConfigError
from rydberg_rbm.noise.channel import NoiseModel
from rydberg_rbm.quantum.params import HamiltonianParams, LindbladParams, SweepProfile
from rydberg_rbm.training.trainer import TrainConfig

logger = logging.getLogger(__name__)

MODES = ("ground_state", "unitary", "lindblad")

DEFAULT_CONFIG: Dict[str, Any] = {
    "output_dir": "runs/default",
    "seed": 1234,
    "mode": "ground_state",
    "angular_units": None,
    "hamiltonian": {
        "n_sites": 8,
        "v_nn": 30.0,
        "interaction_cutoff": 2,
        "ground_state_omega": None,
    },
    "sweep": {
        "total_time": 3.4,
        "omega_max": 2.0,
        "delta_start": -10.0,
        "delta_end": 10.0,
        "ramp_fraction": 0.1,
        "n_checkpoints": 15,
        "points": None,
        "checkpoints": None,
        "dt": None,
    },
    "lindblad": {
        "gamma_rg": 1.0 / 80.0,
        "gamma_gg": 1.0 / 40.0,
        "doppler_rms": 0.0435,
        "n_disorder": 100,
        "alpha": 1.0,
    },
    "dataset": {
        "n_samples": 3000,
        "gzip": False,
    },
    "noise": None,
    "train": {
        "n_hidden": None,
        "learning_rate": 0.05,
        "lr_decay": 0.998,
        "batch_size": 100,
        "cd_steps": 30,
        "epochs": 2000,
        "noise_free_first_epoch": True,
        "validation_split": 0.1,
        "log_every": 50,
        "n_final_snapshots": 10,
        "snapshot_every": 0,
        "val_tolerance": 0.01,
        "init_std": 0.01,
        "exact_nll_max_sites": None,
        "use_noise_layer": True,
        "assumed_noise": None,
    },
    "evaluate": {
        "n_mc": 100000,
        "exact": False,
        "distances": [1, 2],
        "bonds": None,
        "subsystem_sizes": [1, 2, 3],
        "fd_baseline": True,
        "forward_noise": True,
    },
}

_NOISE_KEYS = {"p10", "p01", "p10_sites", "p01_sites"}

# Seed streams derived from the master seed
SEED_DATASET, SEED_NOISE, SEED_TRAIN, SEED_EVALUATE, SEED_DISORDER = range(1, 6)


def derive_seed(master: int, *labels: int) -> int:
    """Deterministic child seed for a (checkpoint, purpose) label tuple"""
    entropy = [int(master)] + [int(x) for x in labels]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def _merge(defaults: Dict, given: Dict, path: str) -> Dict:
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"Unknown config key '{where}'")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"'{where}' must be an object")
            out[key] = _merge(defaults[key], value, where)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _noise_from(value: Optional[Dict], where: str) -> Optional[NoiseModel]:
    if value is None:
        return None
    if not isinstance(value, dict):
        raise ConfigError(f"'{where}' must be an object or null")
    unknown = set(value) - _NOISE_KEYS
    if unknown:
        raise ConfigError(f"Unknown config key '{where}.{sorted(unknown)[0]}'")
    try:
        return NoiseModel.from_dict(value)
    except (ValueError, TypeError, KeyError) as e:
        raise ConfigError(f"'{where}': {e}") from e


@dataclass(frozen=True)
class EvaluateConfig:
    n_mc: int = 100000
    exact: bool = False
    distances: Tuple[int, ...] = (1, 2)
    bonds: Optional[Tuple[int, ...]] = None
    subsystem_sizes: Tuple[int, ...] = (1, 2, 3)
    fd_baseline: bool = True
    forward_noise: bool = True

    def resolved_bonds(self, n_sites: int) -> List[int]:
        return list(self.bonds) if self.bonds is not None else list(range(1, n_sites))


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Resolved experiment configuration

    Attributes:
        data: Full resolved config as plain JSON data
        config_hash: First 16 hex digits of sha256 of the canonical dump
    """
    data: Dict[str, Any]
    config_hash: str

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(payload, dict):
            raise ConfigError("Config must be a JSON object")
        data = _merge(DEFAULT_CONFIG, payload, "")
        cfg = cls(data, config_hash(data))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Config file not found: {path}")
        try:
            payload = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from e
        cfg = cls.from_dict(payload)
        logger.info(f"Loaded config {path} (hash {cfg.config_hash})")
        return cfg

    def with_overrides(self, seed: Optional[int] = None, output_dir: Optional[str] = None) -> "ExperimentConfig":
        data = copy.deepcopy(self.data)
        if seed is not None:
            data["seed"] = int(seed)
        if output_dir is not None:
            data["output_dir"] = str(output_dir)
        return ExperimentConfig.from_dict(data)

    def validate(self) -> None:
        """Build every typed section once so errors surface at load time"""
        if self.mode not in MODES:
            raise ConfigError(f"'mode' must be one of {MODES}, got {self.mode!r}")
        if not isinstance(self.seed, int):
            raise ConfigError(f"'seed' must be an integer, got {self.seed!r}")
        for section in ("hamiltonian", "sweep", "lindblad", "noise", "evaluate"):
            getattr(self, section)
        self.train_config()
        n = self.data["dataset"]["n_samples"]
        if not isinstance(n, int) or n < 1:
            raise ConfigError(f"'dataset.n_samples' must be a positive integer, got {n!r}")
        for s in self.evaluate.resolved_bonds(self.n_sites):
            if not 1 <= s <= self.n_sites - 1:
                raise ConfigError(f"'evaluate.bonds' entry {s} outside 1..{self.n_sites - 1}")

    @property
    def seed(self) -> int:
        return self.data["seed"]

    @property
    def mode(self) -> str:
        return self.data["mode"]

    @property
    def output_dir(self) -> Path:
        return Path(self.data["output_dir"])

    @property
    def angular_units(self) -> Optional[bool]:
        return self.data["angular_units"]

    @property
    def n_sites(self) -> int:
        return self.hamiltonian.n_sites

    @property
    def n_samples(self) -> int:
        return self.data["dataset"]["n_samples"]

    @property
    def gzip(self) -> bool:
        return bool(self.data["dataset"]["gzip"])

    @property
    def dt(self) -> Optional[float]:
        return self.data["sweep"]["dt"]

    @property
    def hamiltonian(self) -> HamiltonianParams:
        h = self.data["hamiltonian"]
        try:
            return HamiltonianParams(h["n_sites"], float(h["v_nn"]), 0.0, 0.0, h["interaction_cutoff"])
        except (ValueError, TypeError) as e:
            raise ConfigError(f"'hamiltonian': {e}") from e

    @property
    def ground_state_omega(self) -> float:
        """Rabi frequency of ground-state mode; defaults to the sweep's peak"""
        value = self.data["hamiltonian"]["ground_state_omega"]
        return float(value) if value is not None else self.sweep.peak_omega

    @property
    def sweep(self) -> SweepProfile:
        s = self.data["sweep"]
        try:
            if s["points"] is not None:
                p = s["points"]
                base = SweepProfile.from_points(p["times"], p["omegas"], p["deltas"])
                n = s["n_checkpoints"]
                checkpoints = [base.total_time * k / n for k in range(1, n + 1)]
            else:
                base = SweepProfile.default(s["total_time"], s["omega_max"], s["delta_start"],
                                            s["delta_end"], s["ramp_fraction"], s["n_checkpoints"])
                checkpoints = list(base.checkpoints)
            if s["checkpoints"] is not None:
                checkpoints = [float(t) for t in s["checkpoints"]]
            return SweepProfile(base.total_time, base.times, base.omegas, base.deltas, tuple(checkpoints))
        except (ValueError, TypeError, KeyError) as e:
            raise ConfigError(f"'sweep': {e}") from e

    @property
    def lindblad(self) -> LindbladParams:
        lind = self.data["lindblad"]
        try:
            lp = LindbladParams(float(lind["gamma_rg"]), float(lind["gamma_gg"]),
                                float(lind["doppler_rms"]), lind["n_disorder"])
            return lp.scaled(float(lind["alpha"]))
        except (ValueError, TypeError) as e:
            raise ConfigError(f"'lindblad': {e}") from e

    @property
    def noise(self) -> Optional[NoiseModel]:
        """Channel used to corrupt generated datasets"""
        return _noise_from(self.data["noise"], "noise")

    @property
    def training_noise(self) -> Optional[NoiseModel]:
        """Channel assumed by the noise layer (may differ from the corrupting one)"""
        t = self.data["train"]
        if not t["use_noise_layer"]:
            return None
        if t["assumed_noise"] is not None:
            return _noise_from(t["assumed_noise"], "train.assumed_noise")
        return self.noise

    def train_config(self, seed: Optional[int] = None) -> TrainConfig:
        t = {k: v for k, v in self.data["train"].items() if k not in ("use_noise_layer", "assumed_noise")}
        try:
            return TrainConfig(seed=self.seed if seed is None else seed, noise=self.training_noise, **t)
        except (ValueError, TypeError) as e:
            raise ConfigError(f"'train': {e}") from e

    @property
    def evaluate(self) -> EvaluateConfig:
        e = self.data["evaluate"]
        try:
            cfg = EvaluateConfig(
                n_mc=int(e["n_mc"]),
                exact=bool(e["exact"]),
                distances=tuple(int(s) for s in e["distances"]),
                bonds=tuple(int(s) for s in e["bonds"]) if e["bonds"] is not None else None,
                subsystem_sizes=tuple(int(s) for s in e["subsystem_sizes"]),
                fd_baseline=bool(e["fd_baseline"]),
                forward_noise=bool(e["forward_noise"]),
            )
        except (ValueError, TypeError) as err:
            raise ConfigError(f"'evaluate': {err}") from err
        if cfg.n_mc < 1:
            raise ConfigError(f"'evaluate.n_mc' must be >= 1, got {cfg.n_mc}")
        return cfg

    def to_json(self) -> Dict[str, Any]:
        return {"config": self.data, "config_hash": self.config_hash, "seed": self.seed}

    def __repr__(self) -> str:
        return f"ExperimentConfig(mode={self.mode}, N={self.n_sites}, hash={self.config_hash})"


def canonical_json(data: Dict[str, Any]) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_hash(data: Dict[str, Any]) -> str:
    """First 16 hex digits of sha256 over the canonical JSON dump (output_dir excluded)"""
    hashed = {k: v for k, v in data.items() if k != "output_dir"}
    return hashlib.sha256(canonical_json(hashed).encode("utf-8")).hexdigest()[:16]

