# utils/estimators.py
"""Monte Carlo estimators and the statistical checks built on them.

All reductions run in a fixed order over an ordered array so that a result
never depends on how the replicates were scheduled.
"""
import math
from typing import Sequence, Tuple

import numpy as np
from scipy import stats


def mean_and_se(values: Sequence[float]) -> Tuple[float, float]:
    """Sample mean and standard error sample-std / sqrt(n).

    Args:
        values: Ordered replicate values

    Returns:
        (mean, standard_error); the standard error is 0 for a single value
    """
    arr = np.asarray(values, dtype=float)
    n = arr.size
    if n == 0:
        raise ValueError("[utils/estimators.py] cannot summarize an empty sample")
    mean = math.fsum(arr) / n
    if n == 1:
        return mean, 0.0
    sq = math.fsum((arr - mean) ** 2)
    return mean, math.sqrt(sq / (n - 1)) / math.sqrt(n)


def binomial_se(p: float, n: int) -> float:
    """Standard error of an empirical frequency with success probability p."""
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def within_se(value: float, target: float, se: float, k: float = 4.0) -> bool:
    """True if |value - target| <= k standard errors (exact match when se is 0)."""
    return abs(value - target) <= k * se


def batch_means_se(samples: Sequence[float], n_batches: int = 20) -> float:
    """Batch-means Monte Carlo standard error of the mean of a correlated chain.

    Args:
        samples: Chain values in iteration order
        n_batches: Number of contiguous batches

    Returns:
        Estimated standard error of the chain mean
    """
    arr = np.asarray(samples, dtype=float)
    batch_size = arr.size // n_batches
    if batch_size < 2:
        raise ValueError(f"[utils/estimators.py] need at least {2 * n_batches} samples for batch means, got {arr.size}")
    trimmed = arr[: batch_size * n_batches].reshape(n_batches, batch_size)
    batch_means = trimmed.mean(axis=1)
    return float(np.std(batch_means, ddof=1) / math.sqrt(n_batches))


def pooled_chisquare(observed: Sequence[int], probs: Sequence[float], min_expected: float = 5.0) -> float:
    """Chi-square goodness-of-fit p-value with sparse cells pooled.

    Cells are pooled left to right until each pooled cell has expected count
    at least ``min_expected``; the remaining probability mass beyond the last
    cell is pooled into the final cell together with its observations.

    Args:
        observed: Observed counts for categories 0..M-1 (counts of draws beyond
            M-1 must be added to the last entry by the caller)
        probs: Model probabilities for categories 0..M-1

    Returns:
        The p-value of the pooled chi-square statistic
    """
    obs = np.asarray(observed, dtype=float)
    p = np.asarray(probs, dtype=float)
    n = obs.sum()
    p = p.copy()
    p[-1] += max(0.0, 1.0 - p.sum())
    expected = n * p

    pooled_obs, pooled_exp = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(obs, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            pooled_obs.append(acc_o)
            pooled_exp.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if pooled_obs:
            pooled_obs[-1] += acc_o
            pooled_exp[-1] += acc_e
        else:
            pooled_obs.append(acc_o)
            pooled_exp.append(acc_e)
    if len(pooled_obs) < 2:
        return 1.0
    pooled_exp_arr = np.asarray(pooled_exp)
    pooled_exp_arr *= n / pooled_exp_arr.sum()
    return float(stats.chisquare(pooled_obs, pooled_exp_arr).pvalue)
