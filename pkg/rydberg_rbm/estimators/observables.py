"""
Observables of reconstructed wavefunctions

Diagonal correlators come from measurement records (or samples of a model),
off-diagonal ones from the local estimator

    O_L(sigma) = sum_sigma' <sigma|O|sigma'> psi(sigma') / psi(sigma)

averaged over samples of |psi|^2, and the second Renyi entropy from the swap
trick on two independent replicas. A "model" is anything exposing n_sites,
log_psi(bits), sample(n, seed) and amplitude_table(): the RBM and the
frequency-distribution baseline both qualify.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from rydberg_rbm.bits import all_configurations, bits_to_index, index_to_bits, place_values
from rydberg_rbm.dataset import Dataset
from rydberg_rbm.estimators.statistics import (
    DEFAULT_BIN,
    delta_method,
    jackknife,
    mean_and_error,
    mean_covariance,
)
from rydberg_rbm.exceptions import EstimatorError, ResourceLimitError
from rydberg_rbm.noise.channel import NoiseModel, corrupt_dataset
from rydberg_rbm.quantum.states import QuantumState, partial_trace, renyi_entropy
from rydberg_rbm.settings import require_enum_sites

logger = logging.getLogger(__name__)

EXACT = "exact"
MONTE_CARLO = "monte-carlo"
EMPIRICAL = "empirical"
METHODS = (EXACT, MONTE_CARLO, EMPIRICAL)

DEFAULT_N_MC = 100_000
SWAP_EXACT_MAX_SITES = 6

_PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_PAULI_Z = np.diag([-1.0, 1.0])


@dataclass
class ObservableResult:
    """
    One estimated expectation value

    Attributes:
        name: Observable name, e.g. "sx", "xx_c", "zz_c", "S2"
        value: Estimate
        std_error: Statistical error (0 for exact results)
        n_samples: Samples used (0 for exact results)
        method: "exact", "monte-carlo" or "empirical"
        metadata: Sites, bond, seed and anything else worth keeping
    """
    name: str
    value: float
    std_error: float = 0.0
    n_samples: int = 0
    method: str = EXACT
    metadata: Dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not self.std_error >= 0:
            raise ValueError(f"std_error must be >= 0, got {self.std_error}")
        if self.method == MONTE_CARLO and self.n_samples < 1:
            raise ValueError("Monte Carlo results need n_samples >= 1")
        self.value = float(self.value)
        self.std_error = float(self.std_error)

    def to_row(self) -> Dict:
        """Flat record for tidy CSV tables"""
        sites = self.metadata.get("sites")
        return {
            "observable": self.name,
            "sites": "-".join(str(s) for s in sites) if sites is not None else "",
            "bond": self.metadata.get("bond"),
            "value": self.value,
            "std_error": self.std_error,
            "method": self.method,
            "n_samples": self.n_samples,
            "seed": self.metadata.get("seed"),
        }


@dataclass(frozen=True)
class LocalOperator:
    """
    Operator acting on at most three sites

    The matrix is indexed by the local configuration of `sites` in the given
    order, first site most significant, bit 1 = |r>.
    """
    sites: Tuple[int, ...]
    matrix: np.ndarray
    name: str = ""

    def __post_init__(self):
        sites = tuple(int(s) for s in self.sites)
        if not 1 <= len(sites) <= 3 or len(set(sites)) != len(sites):
            raise ValueError(f"LocalOperator acts on 1 to 3 distinct sites, got {sites}")
        matrix = np.asarray(self.matrix, dtype=np.float64)
        if matrix.shape != (2 ** len(sites),) * 2:
            raise ValueError(f"Matrix shape {matrix.shape} does not match {len(sites)} sites")
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "matrix", matrix)

    @property
    def is_diagonal(self) -> bool:
        return bool(np.all(self.matrix == np.diag(np.diag(self.matrix))))

    def check_sites(self, n_sites: int) -> None:
        if min(self.sites) < 0 or max(self.sites) >= n_sites:
            raise ValueError(f"Operator sites {self.sites} out of range for N={n_sites}")


def occupation(i: int) -> LocalOperator:
    return LocalOperator((i,), np.diag([0.0, 1.0]), f"n_{i}")


def sigma_x(i: int) -> LocalOperator:
    return LocalOperator((i,), _PAULI_X, f"sx_{i}")


def sigma_x_pair(i: int, j: int) -> LocalOperator:
    return LocalOperator((i, j), np.kron(_PAULI_X, _PAULI_X), f"sxsx_{i}_{j}")


def sigma_z_pair(i: int, j: int) -> LocalOperator:
    return LocalOperator((i, j), np.kron(_PAULI_Z, _PAULI_Z), f"szsz_{i}_{j}")


def _spawn_seeds(seed: int, n: int) -> List[int]:
    return [int(c.generate_state(1)[0]) for c in np.random.SeedSequence(seed).spawn(n)]


def _local_terms(bits: np.ndarray, op: LocalOperator):
    """
    Yield (coefficient, connected configurations) for each nonzero column

    coefficient[s] = <sigma_s|O|sigma'_s> where sigma'_s is sigma_s with the
    operator sites set to the column's local configuration.
    """
    sites = list(op.sites)
    local = bits[:, sites].astype(np.int64) @ place_values(len(sites))
    for col in range(op.matrix.shape[1]):
        if not np.any(op.matrix[:, col]):
            continue
        connected = bits.copy()
        connected[:, sites] = index_to_bits(col, len(sites))
        yield op.matrix[local, col], connected


def local_estimator_values(model, op: LocalOperator, samples: np.ndarray) -> np.ndarray:
    """Per-sample local estimates O_L(sigma)"""
    op.check_sites(model.n_sites)
    samples = np.asarray(samples, dtype=np.uint8)
    log_psi = model.log_psi(samples)
    total = np.zeros(samples.shape[0])
    for coeff, connected in _local_terms(samples, op):
        active = coeff != 0
        if not np.any(active):
            continue
        ratio = np.exp(model.log_psi(connected[active]) - log_psi[active])
        total[active] += coeff[active] * ratio
    return total


def exact_expectation(model, op: LocalOperator) -> float:
    """<psi|O|psi> of the normalized model wavefunction by enumeration"""
    op.check_sites(model.n_sites)
    require_enum_sites(model.n_sites, "exact expectation")
    psi = np.asarray(model.amplitude_table(), dtype=np.float64)
    configs = all_configurations(model.n_sites)
    total = 0.0
    for coeff, connected in _local_terms(configs, op):
        total += float(np.sum(psi * coeff * psi[bits_to_index(connected)]))
    return total


def local_estimator_expectation(model, op: LocalOperator, n_mc: int = DEFAULT_N_MC, seed: int = 0,
                                samples: Optional[np.ndarray] = None) -> ObservableResult:
    """
    Monte Carlo mean of O_L with a binned standard error (bin 100)

    Args:
        model: Wavefunction model
        op: Operator on at most three sites
        n_mc: Number of samples drawn when samples is None
        seed: Sampling seed
        samples: Reuse these samples instead of drawing new ones
    """
    if samples is None:
        samples = model.sample(n_mc, seed)
    values = local_estimator_values(model, op, samples)
    mean, err = mean_and_error(values, DEFAULT_BIN)
    return ObservableResult(op.name or "local", mean, err, len(values), MONTE_CARLO,
                            {"sites": list(op.sites), "seed": seed})


def transverse_profile(model, n_mc: int = DEFAULT_N_MC, seed: int = 0,
                       exact: bool = False) -> List[ObservableResult]:
    """<sigma^x_i> for every site, all from one sample set"""
    n = model.n_sites
    if exact:
        return [ObservableResult("sx", exact_expectation(model, sigma_x(i)), metadata={"sites": [i]})
                for i in range(n)]
    samples = model.sample(n_mc, seed)
    results = []
    for i in range(n):
        res = local_estimator_expectation(model, sigma_x(i), samples=samples, seed=seed)
        res.name = "sx"
        results.append(res)
    return results


def _xx_columns(model, samples: np.ndarray, bonds: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    xx = np.column_stack([local_estimator_values(model, sigma_x_pair(i, i + 1), samples) for i in bonds])
    x = np.column_stack([local_estimator_values(model, sigma_x(i), samples) for i in range(model.n_sites)])
    return xx, x


def _check_bond_site(i: int, n_sites: int) -> None:
    if not 0 <= i <= n_sites - 2:
        raise ValueError(f"Nearest-neighbour pair (i, i+1) needs 0 <= i <= {n_sites - 2}, got {i}")


def xx_connected(model, i: int, n_mc: int = DEFAULT_N_MC, seed: int = 0,
                 exact: bool = False) -> ObservableResult:
    """
    <sx_i sx_{i+1}> - <sx_i><sx_{i+1}>

    The Monte Carlo error propagates the covariance of the three binned means.
    """
    n = model.n_sites
    _check_bond_site(i, n)
    meta = {"sites": [i, i + 1], "bond": i + 1, "seed": None if exact else seed}
    if exact:
        value = (exact_expectation(model, sigma_x_pair(i, i + 1))
                 - exact_expectation(model, sigma_x(i)) * exact_expectation(model, sigma_x(i + 1)))
        return ObservableResult("xx_c", value, metadata=meta)

    samples = model.sample(n_mc, seed)
    columns = np.column_stack([
        local_estimator_values(model, sigma_x_pair(i, i + 1), samples),
        local_estimator_values(model, sigma_x(i), samples),
        local_estimator_values(model, sigma_x(i + 1), samples),
    ])
    m = columns.mean(axis=0)
    value = m[0] - m[1] * m[2]
    err = delta_method(np.array([1.0, -m[2], -m[1]]), mean_covariance(columns))
    return ObservableResult("xx_c", value, err, samples.shape[0], MONTE_CARLO, meta)


def avg_transverse_field(model, n_mc: int = DEFAULT_N_MC, seed: int = 0,
                         exact: bool = False) -> ObservableResult:
    """Spatial average x-bar of <sigma^x_i>"""
    n = model.n_sites
    if exact:
        value = np.mean([exact_expectation(model, sigma_x(i)) for i in range(n)])
        return ObservableResult("x_avg", value)
    samples = model.sample(n_mc, seed)
    per_sample = np.mean([local_estimator_values(model, sigma_x(i), samples) for i in range(n)], axis=0)
    mean, err = mean_and_error(per_sample)
    return ObservableResult("x_avg", mean, err, samples.shape[0], MONTE_CARLO, {"seed": seed})


def avg_xx_correlator(model, n_mc: int = DEFAULT_N_MC, seed: int = 0,
                      exact: bool = False) -> ObservableResult:
    """Mean of xx_connected over all N - 1 nearest-neighbour bonds"""
    n = model.n_sites
    if n < 2:
        raise ValueError("avg_xx_correlator needs N >= 2")
    if exact:
        value = np.mean([xx_connected(model, i, exact=True).value for i in range(n - 1)])
        return ObservableResult("xx_c_avg", value)

    samples = model.sample(n_mc, seed)
    xx, x = _xx_columns(model, samples, range(n - 1))
    mx = x.mean(axis=0)
    value = np.mean(xx.mean(axis=0) - mx[:-1] * mx[1:])
    grad_x = np.zeros(n)
    grad_x[:-1] -= mx[1:]
    grad_x[1:] -= mx[:-1]
    gradient = np.concatenate([np.ones(n - 1), grad_x]) / (n - 1)
    err = delta_method(gradient, mean_covariance(np.column_stack([xx, x])))
    return ObservableResult("xx_c_avg", value, err, samples.shape[0], MONTE_CARLO, {"seed": seed})


Source = Union[Dataset, object]


def _z_values(bits: np.ndarray) -> np.ndarray:
    return 2.0 * bits.astype(np.float64) - 1.0


def _connected_zz(source: Source, pairs: Sequence[Tuple[int, int]], name: str, meta: Dict,
                  n_mc: int, seed: int, exact: bool) -> ObservableResult:
    """Average of connected <sz_i sz_j>_c over pairs"""
    n = source.n_sites
    for i, j in pairs:
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"Sites ({i}, {j}) out of range for N={n}")
    singles = sorted({s for pair in pairs for s in pair})
    col = {s: k for k, s in enumerate(singles)}

    def statistic(means: np.ndarray) -> float:
        prods, ones = means[: len(pairs)], means[len(pairs):]
        return float(np.mean([prods[k] - ones[col[i]] * ones[col[j]] for k, (i, j) in enumerate(pairs)]))

    if exact and not isinstance(source, Dataset):
        require_enum_sites(n, "exact correlator")
        probs = np.asarray(source.amplitude_table(), dtype=np.float64) ** 2
        z = _z_values(all_configurations(n))
        means = np.concatenate([[probs @ (z[:, i] * z[:, j]) for i, j in pairs], probs @ z[:, singles]])
        return ObservableResult(name, statistic(means), metadata=meta)

    if isinstance(source, Dataset):
        if source.is_empty():
            raise ValueError("Dataset is empty")
        bits, method = source.bits, EMPIRICAL
    else:
        bits, method = source.sample(n_mc, seed), MONTE_CARLO
        meta = {**meta, "seed": seed}
    z = _z_values(bits)
    columns = np.column_stack([z[:, i] * z[:, j] for i, j in pairs] + [z[:, singles]])
    value, err = jackknife(columns, statistic)
    return ObservableResult(name, value, err, bits.shape[0], method, meta)


def diagonal_correlator(source: Source, i: int, j: int, n_mc: int = DEFAULT_N_MC, seed: int = 0,
                        exact: bool = False) -> ObservableResult:
    """
    <sz_i sz_j> - <sz_i><sz_j> with sz = 2n - 1

    From the empirical frequencies of a Dataset, from samples of a model, or
    from the model's enumerated table (exact=True). Jackknife errors.
    """
    return _connected_zz(source, [(i, j)], "zz_c", {"sites": [i, j]}, n_mc, seed, exact)


def avg_correlator(source: Source, s: int, n_mc: int = DEFAULT_N_MC, seed: int = 0,
                   exact: bool = False) -> ObservableResult:
    """Spatial average of <sz_i sz_{i+s}>_c over i = 0 .. N - s - 1"""
    n = source.n_sites
    if not 1 <= s <= n - 1:
        raise ValueError(f"Distance must satisfy 1 <= s <= {n - 1}, got {s}")
    pairs = [(i, i + s) for i in range(n - s)]
    return _connected_zz(source, pairs, "zz_c_avg", {"distance": s}, n_mc, seed, exact)


def occupation_expectation(source: Source, i: int, n_mc: int = DEFAULT_N_MC, seed: int = 0,
                           exact: bool = False) -> ObservableResult:
    """<n_i> from records, samples or the enumerated table"""
    n = source.n_sites
    if not 0 <= i < n:
        raise ValueError(f"Site {i} out of range for N={n}")
    meta = {"sites": [i]}
    if exact and not isinstance(source, Dataset):
        require_enum_sites(n, "exact occupation")
        probs = np.asarray(source.amplitude_table(), dtype=np.float64) ** 2
        return ObservableResult("n", float(probs @ all_configurations(n)[:, i]), metadata=meta)
    if isinstance(source, Dataset):
        bits, method = source.bits, EMPIRICAL
    else:
        bits, method = source.sample(n_mc, seed), MONTE_CARLO
        meta["seed"] = seed
    value, err = jackknife(bits[:, i].astype(np.float64), lambda m: float(m[0]))
    return ObservableResult("n", value, err, bits.shape[0], method, meta)


def _check_region(region: Sequence[int], n_sites: int) -> List[int]:
    sites = sorted(int(s) for s in region)
    if not sites or sites[0] < 0 or sites[-1] >= n_sites:
        raise ValueError(f"Region {list(region)} out of range for N={n_sites}")
    if sites != list(range(sites[0], sites[-1] + 1)):
        raise ValueError(f"Region must be contiguous, got {sites}")
    return sites


def renyi2_swap(model, region: Sequence[int], n_mc: int = DEFAULT_N_MC, seed: int = 0) -> ObservableResult:
    """
    S2 of region A from the swap estimator on two independent replicas

    Estimates Tr rho_A^2 as the mean of
    psi(s1_A s2_B) psi(s2_A s1_B) / (psi(s1) psi(s2)); S2 = -log of the mean.

    Raises:
        EstimatorError: if the estimated trace is not positive
    """
    sites = _check_region(region, model.n_sites)
    seed_a, seed_b = _spawn_seeds(seed, 2)
    first = np.asarray(model.sample(n_mc, seed_a), dtype=np.uint8)
    second = np.asarray(model.sample(n_mc, seed_b), dtype=np.uint8)
    swapped_1, swapped_2 = first.copy(), second.copy()
    swapped_1[:, sites] = second[:, sites]
    swapped_2[:, sites] = first[:, sites]
    log_ratio = (model.log_psi(swapped_1) + model.log_psi(swapped_2)
                 - model.log_psi(first) - model.log_psi(second))
    mean, err = mean_and_error(np.exp(log_ratio))
    if not mean > 0:
        raise EstimatorError(f"Swap estimate of Tr rho_A^2 is {mean}; cannot take its log")
    meta = {"sites": sites, "seed": seed, "trace": mean, "trace_error": err}
    return ObservableResult("S2", -np.log(mean), err / mean, n_mc, MONTE_CARLO, meta)


def swap_expectation_exact(model, region: Sequence[int]) -> float:
    """Expectation of the swap estimator by double enumeration (N <= 6)"""
    n = model.n_sites
    if n > SWAP_EXACT_MAX_SITES:
        raise ResourceLimitError(f"Double enumeration needs N <= {SWAP_EXACT_MAX_SITES}, got N={n}")
    sites = _check_region(region, n)
    psi = np.asarray(model.amplitude_table(), dtype=np.float64)
    mask = int(place_values(n)[sites].sum())
    idx = np.arange(2**n)
    i, j = np.meshgrid(idx, idx, indexing="ij")
    swap_1 = (j & mask) | (i & ~mask)
    swap_2 = (i & mask) | (j & ~mask)
    return float(np.sum(psi[i] * psi[j] * psi[swap_1] * psi[swap_2]))


def renyi2_exact(model, region: Sequence[int]) -> ObservableResult:
    """S2 of the reduced state of the enumerated wavefunction"""
    sites = _check_region(region, model.n_sites)
    require_enum_sites(model.n_sites, "exact Renyi entropy")
    state = QuantumState(model.n_sites, np.asarray(model.amplitude_table(), dtype=np.float64), check=False)
    return ObservableResult("S2", renyi_entropy(partial_trace(state, sites), 2), metadata={"sites": sites})


def mutual_information_rbm(model, s: int, n_mc: int = DEFAULT_N_MC, seed: int = 0,
                           exact: bool = False) -> ObservableResult:
    """
    I2(s) = S2(A) + S2(B) for the pure model state, A = [0, s), B = [s, N)

    The Monte Carlo path estimates both entropies from independent seeds and
    adds their errors in quadrature.
    """
    n = model.n_sites
    if not 1 <= s <= n - 1:
        raise ValueError(f"Bond must satisfy 1 <= s <= {n - 1}, got {s}")
    left, right = range(s), range(s, n)
    if exact:
        a, b = renyi2_exact(model, left), renyi2_exact(model, right)
        return ObservableResult("I2", a.value + b.value,
                                metadata={"bond": s, "S2_A": a.value, "S2_B": b.value})
    seed_a, seed_b = _spawn_seeds(seed, 2)
    a = renyi2_swap(model, left, n_mc, seed_a)
    b = renyi2_swap(model, right, n_mc, seed_b)
    meta = {"bond": s, "seed": seed, "S2_A": a.value, "S2_B": b.value}
    return ObservableResult("I2", a.value + b.value, float(np.hypot(a.std_error, b.std_error)),
                            n_mc, MONTE_CARLO, meta)


DIAGONAL_KINDS = ("occupation", "zz_connected", "avg_zz")


@dataclass(frozen=True)
class DiagonalObservable:
    """
    A statistic of occupation-basis records

    Attributes:
        kind: "occupation" (sites = (i,)), "zz_connected" (sites = (i, j))
              or "avg_zz" (distance = s)
    """
    kind: str
    sites: Tuple[int, ...] = ()
    distance: Optional[int] = None

    def __post_init__(self):
        if self.kind not in DIAGONAL_KINDS:
            raise ValueError(f"kind must be one of {DIAGONAL_KINDS}, got {self.kind!r}")
        need = {"occupation": 1, "zz_connected": 2, "avg_zz": 0}[self.kind]
        if len(self.sites) != need:
            raise ValueError(f"{self.kind} needs {need} sites, got {self.sites}")
        if self.kind == "avg_zz" and self.distance is None:
            raise ValueError("avg_zz needs a distance")

    def evaluate(self, source: Source, n_mc: int = DEFAULT_N_MC, seed: int = 0,
                 exact: bool = False) -> ObservableResult:
        if self.kind == "occupation":
            return occupation_expectation(source, self.sites[0], n_mc, seed, exact)
        if self.kind == "zz_connected":
            return diagonal_correlator(source, self.sites[0], self.sites[1], n_mc, seed, exact)
        return avg_correlator(source, self.distance, n_mc, seed, exact)


def forward_noise(model, nm: NoiseModel, observable: Union[DiagonalObservable, LocalOperator],
                  n_mc: int = DEFAULT_N_MC, seed: int = 0) -> ObservableResult:
    """
    Evaluate a diagonal observable under the corrupted distribution p~(tau)

    sigma is sampled from the model with `seed`, then pushed through the
    channel with a derived seed; a noiseless channel leaves the samples as is.

    Raises:
        ValueError: for an off-diagonal operator
    """
    if isinstance(observable, LocalOperator) and not observable.is_diagonal:
        raise ValueError(f"forward_noise needs a diagonal observable, got {observable.name or observable.sites}")
    clean = Dataset(np.asarray(model.sample(n_mc, seed), dtype=np.uint8), seed=seed)
    noisy = corrupt_dataset(clean, nm, _spawn_seeds(seed, 1)[0])

    if isinstance(observable, LocalOperator):
        observable.check_sites(model.n_sites)
        sites = list(observable.sites)
        local = noisy.bits[:, sites].astype(np.int64) @ place_values(len(sites))
        mean, err = mean_and_error(np.diag(observable.matrix)[local])
        result = ObservableResult(observable.name or "diag", mean, err, n_mc, MONTE_CARLO, {"sites": sites})
    else:
        result = observable.evaluate(noisy)
        result.method = MONTE_CARLO
    result.metadata.update({"seed": seed, "noise": nm.to_dict()})
    return result

