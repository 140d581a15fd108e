"""
Error bars for sample averages

Binned standard errors for Monte Carlo streams, a blocked jackknife for
nonlinear statistics of datasets, and delta-method propagation for smooth
functions of several binned means.
"""

from typing import Callable, Tuple

import numpy as np

DEFAULT_BIN = 100
JACKKNIFE_BLOCKS = 100


def bin_means(values: np.ndarray, bin_size: int = DEFAULT_BIN) -> np.ndarray:
    """
    Means over consecutive bins of bin_size samples

    Trailing samples that do not fill a bin are dropped. With fewer than two
    full bins the samples themselves are returned.
    """
    values = np.asarray(values, dtype=np.float64)
    n_bins = values.shape[0] // bin_size
    if n_bins < 2:
        return values
    trimmed = values[: n_bins * bin_size]
    return trimmed.reshape((n_bins, bin_size) + values.shape[1:]).mean(axis=1)


def binned_error(values: np.ndarray, bin_size: int = DEFAULT_BIN) -> float:
    """Standard error of the mean from the spread of bin means"""
    means = bin_means(values, bin_size)
    if means.shape[0] < 2:
        return 0.0
    return float(np.std(means, ddof=1) / np.sqrt(means.shape[0]))


def mean_and_error(values: np.ndarray, bin_size: int = DEFAULT_BIN) -> Tuple[float, float]:
    values = np.asarray(values, dtype=np.float64)
    return float(values.mean()), binned_error(values, bin_size)


def mean_covariance(columns: np.ndarray, bin_size: int = DEFAULT_BIN) -> np.ndarray:
    """Covariance matrix of the column means, estimated from bin means"""
    means = bin_means(np.asarray(columns, dtype=np.float64), bin_size)
    k = means.shape[1]
    if means.shape[0] < 2:
        return np.zeros((k, k))
    return np.atleast_2d(np.cov(means, rowvar=False, ddof=1)) / means.shape[0]


def delta_method(gradient: np.ndarray, covariance: np.ndarray) -> float:
    """First-order error of f(means): sqrt(g^T C g), clipped at zero"""
    g = np.asarray(gradient, dtype=np.float64)
    return float(np.sqrt(max(g @ covariance @ g, 0.0)))


def jackknife(columns: np.ndarray, fn: Callable[[np.ndarray], float],
              n_blocks: int = JACKKNIFE_BLOCKS) -> Tuple[float, float]:
    """
    Blocked jackknife estimate of fn(column means)

    Args:
        columns: (n_samples, k) per-sample quantities
        fn: Maps a length-k vector of means to the statistic
        n_blocks: Number of leave-one-out blocks (capped at n_samples)

    Returns:
        (fn of the full means, jackknife standard error)
    """
    columns = np.asarray(columns, dtype=np.float64)
    if columns.ndim == 1:
        columns = columns[:, None]
    n = columns.shape[0]
    if n == 0:
        raise ValueError("jackknife needs at least one sample")
    value = float(fn(columns.mean(axis=0)))
    n_blocks = min(n_blocks, n)
    if n_blocks < 2:
        return value, 0.0

    blocks = np.array_split(np.arange(n), n_blocks)
    total = columns.sum(axis=0)
    estimates = np.array([
        fn((total - columns[rows].sum(axis=0)) / (n - rows.size)) for rows in blocks
    ])
    spread = ((n_blocks - 1) / n_blocks) * np.sum((estimates - estimates.mean()) ** 2)
    return value, float(np.sqrt(spread))
