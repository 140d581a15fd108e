"""
Maximum-likelihood training of RBM wavefunctions

Two-layer training fits p(sigma) to the records directly. Three-layer training
fits the corrupted distribution p~(tau) = sum_sigma p(tau|sigma) p(sigma), whose
positive phase averages over the clamped posterior p(sigma | tau). With a
noiseless channel both reduce to the same code path.
"""

import logging
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import torch
import torch.optim as optim

from rydberg_rbm.dataset import Dataset
from rydberg_rbm.exceptions import TrainingDivergedError
from rydberg_rbm.noise.channel import NoiseModel, apply_channel, clamped_gibbs
from rydberg_rbm.rbm.machine import DTYPE, RBM
from rydberg_rbm.settings import get_settings

logger = logging.getLogger(__name__)

Target = Union[Dataset, np.ndarray]


def _uses_noise(nm: Optional[NoiseModel]) -> bool:
    return nm is not None and not nm.is_trivial


def _target_weights(data: Target, n_sites: int) -> torch.Tensor:
    """Empirical (or given) weights over all 2^N configurations"""
    if isinstance(data, Dataset):
        if data.is_empty():
            raise ValueError("Dataset is empty")
        if data.n_sites != n_sites:
            raise ValueError(f"Dataset has N={data.n_sites}, machine has N={n_sites}")
        return torch.as_tensor(data.frequencies(), dtype=DTYPE)
    weights = np.asarray(data, dtype=np.float64)
    if weights.shape != (2**n_sites,) or np.any(weights < 0) or weights.sum() <= 0:
        raise ValueError(f"Target weights must be a nonnegative vector of length {2**n_sites}")
    return torch.as_tensor(weights / weights.sum(), dtype=DTYPE)


def nll_tensor(machine: RBM, data: Target, nm: Optional[NoiseModel] = None) -> torch.Tensor:
    """Differentiable negative log-likelihood by exact enumeration"""
    log_p = machine.log_probability_table()
    if _uses_noise(nm):
        log_p = torch.log(apply_channel(torch.exp(log_p), nm, machine.n_visible))
    weights = _target_weights(data, machine.n_visible)
    seen = weights > 0
    return -(weights[seen] * log_p[seen]).sum()


def nll_exact(machine: RBM, data: Target, nm: Optional[NoiseModel] = None) -> float:
    """
    -(1/|D|) sum_tau log p(tau), or log p~(tau) when a noise model is given

    Args:
        machine: The RBM
        data: Dataset, or a weight vector over all configurations
        nm: Channel for the three-layer likelihood
    """
    with torch.no_grad():
        return float(nll_tensor(machine, data, nm))


def _named_grads(machine: RBM, grads: Sequence[torch.Tensor]) -> Dict[str, np.ndarray]:
    return {name: g.detach().numpy().copy() for (name, _), g in zip(machine.named_parameters(), grads)}


def grad_exact(machine: RBM, data: Target, nm: Optional[NoiseModel] = None) -> Dict[str, np.ndarray]:
    """
    Exact NLL gradient

    <dE>_p - (1/|D|) sum_tau dE(tau), with dE(tau) replaced by the clamped
    posterior average <dE>_{p(sigma|tau)} in the three-layer case.
    """
    loss = nll_tensor(machine, data, nm)
    grads = torch.autograd.grad(loss, list(machine.parameters()))
    return _named_grads(machine, grads)


def contrastive_divergence_loss(machine: RBM, batch: torch.Tensor, k: int,
                                nm: Optional[NoiseModel], generator: torch.Generator) -> torch.Tensor:
    """
    Surrogate whose gradient is the CD-k estimate of the NLL gradient

    Negative chains start at the batch records; the three-layer positive phase
    runs k clamped sweeps per record. Samples carry no gradient.
    """
    negative = machine.gibbs_steps(batch, k, generator)
    if _uses_noise(nm):
        positive = clamped_gibbs(machine, nm, batch, k, generator)
    else:
        positive = batch
    return machine.effective_energy(negative).mean() - machine.effective_energy(positive).mean()


def cd_gradient(machine: RBM, batch, k: int, nm: Optional[NoiseModel] = None,
                seed: int = 0) -> Dict[str, np.ndarray]:
    """CD-k gradient for one minibatch, deterministic under seed"""
    batch = machine._as_tensor(batch)
    if batch.dim() != 2 or batch.shape[0] == 0:
        raise ValueError("cd_gradient needs a nonempty (B, N) batch")
    generator = torch.Generator().manual_seed(int(seed))
    loss = contrastive_divergence_loss(machine, batch, k, nm, generator)
    grads = torch.autograd.grad(loss, list(machine.parameters()))
    return _named_grads(machine, grads)


@dataclass
class TrainConfig:
    """
    Hyperparameters of a training run

    Attributes:
        n_hidden: Hidden units (default 2N)
        learning_rate: Initial SGD step
        lr_decay: Multiplicative learning-rate factor per epoch
        batch_size: Minibatch size
        cd_steps: Gibbs sweeps k per CD estimate
        epochs: Number of passes over the training split
        seed: Master seed (init, shuffling, sampling, splits)
        noise: Channel of the three-layer model, or None for two-layer
        noise_free_first_epoch: Train epoch 1 without the noise layer
        validation_split: Held-out share for the validation NLL
        log_every: Epoch interval of progress logs
        n_final_snapshots: Parameter snapshots kept from the last epochs
        snapshot_every: Extra snapshot interval (0 = none)
        val_tolerance: Allowed validation-NLL growth over the final quartile
        init_std: Weight init standard deviation
        exact_nll_max_sites: Largest N with per-epoch exact NLL (default from settings)
    """
    n_hidden: Optional[int] = None
    learning_rate: float = 0.05
    lr_decay: float = 0.998
    batch_size: int = 100
    cd_steps: int = 30
    epochs: int = 2000
    seed: int = 0
    noise: Optional[NoiseModel] = None
    noise_free_first_epoch: bool = True
    validation_split: float = 0.1
    log_every: int = 50
    n_final_snapshots: int = 10
    snapshot_every: int = 0
    val_tolerance: float = 0.01
    init_std: float = 0.01
    exact_nll_max_sites: Optional[int] = None

    def __post_init__(self):
        if isinstance(self.noise, dict):
            self.noise = NoiseModel.from_dict(self.noise)
        if self.n_hidden is not None and self.n_hidden < 1:
            raise ValueError(f"n_hidden must be >= 1, got {self.n_hidden}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0 < self.lr_decay <= 1:
            raise ValueError(f"lr_decay must be in (0, 1], got {self.lr_decay}")
        for name in ("batch_size", "cd_steps", "epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0 <= self.validation_split < 1:
            raise ValueError(f"validation_split must be in [0, 1), got {self.validation_split}")
        if self.init_std < 0 or self.val_tolerance < 0 or self.n_final_snapshots < 0:
            raise ValueError("init_std, val_tolerance and n_final_snapshots must be >= 0")

    def hidden_units(self, n_visible: int) -> int:
        return self.n_hidden if self.n_hidden is not None else 2 * n_visible

    def to_dict(self) -> Dict:
        out = asdict(self)
        out["noise"] = self.noise.to_dict() if self.noise is not None else None
        return out

    @classmethod
    def from_dict(cls, payload: Dict) -> "TrainConfig":
        return cls(**payload)


@dataclass
class EpochRecord:
    epoch: int
    nll: Optional[float]
    val_nll: Optional[float]
    grad_norm: float
    lr: float


@dataclass
class TrainReport:
    """
    Outcome of a training run

    Attributes:
        config: The TrainConfig used
        history: One EpochRecord per epoch, contiguous from 1
        snapshots: (epoch, parameter arrays) pairs, oldest first
        final: Final parameter arrays
        wall_time: Seconds spent in fit
        validation_warning: Validation NLL grew over the final quartile
    """
    config: TrainConfig
    history: List[EpochRecord] = field(default_factory=list)
    snapshots: List[Tuple[int, Dict[str, np.ndarray]]] = field(default_factory=list)
    final: Dict[str, np.ndarray] = field(default_factory=dict)
    wall_time: float = 0.0
    validation_warning: bool = False

    def machine(self) -> RBM:
        return RBM.from_arrays(**self.final)

    def snapshot_machines(self, last: Optional[int] = None) -> List[RBM]:
        chosen = self.snapshots if last is None else self.snapshots[-last:]
        return [RBM.from_arrays(**arrays) for _, arrays in chosen]

    def training_curve(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.history],
                            columns=["epoch", "nll", "val_nll", "grad_norm", "lr"])

    def to_dict(self) -> Dict:
        def listed(arrays):
            return {k: v.tolist() for k, v in arrays.items()}
        return {
            "config": self.config.to_dict(),
            "history": [asdict(r) for r in self.history],
            "snapshots": [{"epoch": e, **listed(a)} for e, a in self.snapshots],
            "final": listed(self.final),
            "wall_time": self.wall_time,
            "validation_warning": self.validation_warning,
        }

    @classmethod
    def from_dict(cls, payload: Dict) -> "TrainReport":
        def arrays(d):
            return {k: np.asarray(d[k], dtype=np.float64) for k in ("weights", "visible_bias", "hidden_bias")}
        return cls(
            config=TrainConfig.from_dict(payload["config"]),
            history=[EpochRecord(**r) for r in payload["history"]],
            snapshots=[(int(s["epoch"]), arrays(s)) for s in payload["snapshots"]],
            final=arrays(payload["final"]),
            wall_time=float(payload["wall_time"]),
            validation_warning=bool(payload["validation_warning"]),
        )


class RbmTrainer:
    """
    SGD trainer for one machine

    Owns the RBM, a torch.optim.SGD optimizer with an ExponentialLR schedule
    (gamma = lr_decay) and the torch.Generator all randomness is drawn from.
    """

    def __init__(self, n_visible: int, cfg: TrainConfig):
        self.cfg = cfg
        self.generator = torch.Generator().manual_seed(int(cfg.seed))
        self.machine = RBM(n_visible, cfg.hidden_units(n_visible), cfg.init_std, self.generator)
        self.optimizer = optim.SGD(self.machine.parameters(), lr=cfg.learning_rate)
        self.scheduler = optim.lr_scheduler.ExponentialLR(self.optimizer, gamma=cfg.lr_decay)
        cap = cfg.exact_nll_max_sites
        self.exact_nll = n_visible <= (cap if cap is not None else min(get_settings().max_enum_sites, 16))

    def _epoch(self, data: torch.Tensor, nm: Optional[NoiseModel]) -> float:
        cfg = self.cfg
        perm = torch.randperm(data.shape[0], generator=self.generator)
        norms = []
        for start in range(0, data.shape[0], cfg.batch_size):
            batch = data[perm[start:start + cfg.batch_size]]
            self.optimizer.zero_grad()
            loss = contrastive_divergence_loss(self.machine, batch, cfg.cd_steps, nm, self.generator)
            loss.backward()
            norms.append(float(torch.sqrt(sum((p.grad**2).sum() for p in self.machine.parameters()))))
            self.optimizer.step()
        return float(np.mean(norms))

    def fit(self, dataset: Dataset) -> TrainReport:
        """
        Train on the dataset

        Raises:
            ValueError: on an empty dataset
            TrainingDivergedError: if parameters become non-finite
        """
        cfg = self.cfg
        if dataset.is_empty():
            raise ValueError("Cannot train on an empty dataset")
        if dataset.n_sites != self.machine.n_visible:
            raise ValueError(f"Dataset has N={dataset.n_sites}, machine has N={self.machine.n_visible}")
        train_set, val_set = dataset.split(cfg.validation_split, seed=cfg.seed)
        data = torch.from_numpy(train_set.bits).to(DTYPE)
        report = TrainReport(config=cfg)
        last_finite = self.machine.arrays()
        started = time.perf_counter()
        mode = "three-layer" if _uses_noise(cfg.noise) else "two-layer"
        logger.info(f"Training {mode} RBM N={self.machine.n_visible} N_h={self.machine.n_hidden} "
                    f"on {train_set.n_samples} records for {cfg.epochs} epochs")

        for epoch in range(1, cfg.epochs + 1):
            nm = None if (epoch == 1 and cfg.noise_free_first_epoch) else cfg.noise
            lr = self.optimizer.param_groups[0]["lr"]
            grad_norm = self._epoch(data, nm)
            self.scheduler.step()

            if not self.machine.is_finite() or not np.isfinite(grad_norm):
                logger.error(f"Training diverged in epoch {epoch}")
                raise TrainingDivergedError(
                    f"Non-finite parameters in epoch {epoch}; lower the learning rate",
                    epoch=epoch, snapshot=last_finite,
                )
            last_finite = self.machine.arrays()

            nll = val_nll = None
            if self.exact_nll:
                nll = nll_exact(self.machine, train_set, cfg.noise)
                if val_set is not None:
                    val_nll = nll_exact(self.machine, val_set, cfg.noise)
            report.history.append(EpochRecord(epoch, nll, val_nll, grad_norm, lr))

            in_final = epoch > cfg.epochs - cfg.n_final_snapshots
            periodic = cfg.snapshot_every and epoch % cfg.snapshot_every == 0
            if in_final or periodic:
                report.snapshots.append((epoch, last_finite))

            if cfg.log_every and epoch % cfg.log_every == 0:
                logger.info(f"Epoch {epoch}/{cfg.epochs}: nll={nll}, val_nll={val_nll}, "
                            f"|grad|={grad_norm:.4g}, lr={lr:.4g}")

        report.final = self.machine.arrays()
        report.wall_time = time.perf_counter() - started
        report.validation_warning = _validation_grew(report.history, cfg.val_tolerance)
        return report


def _validation_grew(history: List[EpochRecord], tolerance: float) -> bool:
    values = [r.val_nll for r in history if r.val_nll is not None]
    if len(values) < 2:
        return False
    quartile = values[-max(2, len(values) // 4):]
    growth = quartile[-1] - min(quartile)
    if growth > tolerance:
        logger.warning(f"Validation NLL grew by {growth:.4g} over the final quartile of epochs")
        return True
    return False


def train(d: Dataset, cfg: TrainConfig) -> TrainReport:
    """Train a fresh machine on d with cfg"""
    return RbmTrainer(d.n_sites, cfg).fit(d)


def resplit_seeds(seed: int, n_resplits: int) -> List[int]:
    children = np.random.SeedSequence(seed).spawn(n_resplits)
    return [int(c.generate_state(1)[0]) for c in children]


def train_resplits(d: Dataset, cfg: TrainConfig, n_resplits: int = 5) -> List[TrainReport]:
    """Independent runs on random 90/10 (or cfg.validation_split) splits"""
    split = cfg.validation_split or 0.1
    reports = []
    for i, seed in enumerate(resplit_seeds(cfg.seed, n_resplits)):
        logger.info(f"Resplit {i + 1}/{n_resplits} (seed={seed})")
        reports.append(train(d, replace(cfg, seed=seed, validation_split=split)))
    return reports


def snapshot_spread(reports: Sequence[TrainReport], fn: Callable[[RBM], float],
                    last: Optional[int] = None) -> Tuple[float, float]:
    """Mean and standard deviation of fn over the final snapshots of all reports"""
    values = [fn(m) for r in reports for m in r.snapshot_machines(last)]
    if not values:
        raise ValueError("No snapshots to evaluate")
    return float(np.mean(values)), float(np.std(values, ddof=1) if len(values) > 1 else 0.0)
