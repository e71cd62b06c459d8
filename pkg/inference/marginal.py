# inference/marginal.py
"""Closed-form segment marginal likelihood for the normal / normal-inverse-gamma pair.

With theta = (mu, sigma^2), sigma^2 ~ InvGamma(a0, b0) and mu | sigma^2 ~ N(m0, sigma^2 / k0),

    log p(y_1..y_n) = gammaln(a_n) - gammaln(a0) + a0 log b0 - a_n log b_n
                      + (log k0 - log k_n) / 2 - (n / 2) log(2 pi)

where k_n = k0 + n, a_n = a0 + n / 2 and
b_n = b0 + SS / 2 + k0 n (ybar - m0)^2 / (2 k_n).
"""
import math
from typing import NamedTuple, Sequence, Union

import numpy as np
from scipy.special import gammaln

from engine.errors import UnsupportedModelError
from engine.mixture import BaselineSpec, KernelSpec
from models.changepoint import Dataset

LOG_2PI = math.log(2.0 * math.pi)


class PosteriorNig(NamedTuple):
    """Normal-inverse-gamma posterior of one segment's theta."""
    mean: float
    kappa: float
    shape: float
    scale: float


def check_conjugate(baseline: BaselineSpec, kernel: KernelSpec) -> None:
    """Raise unless the kernel/baseline pair admits the closed form."""
    if baseline.family != "normal_inverse_gamma" or kernel.family != "normal":
        raise UnsupportedModelError(
            f"[inference/marginal.py] no closed form for kernel '{kernel.family}' with baseline '{baseline.family}'"
        )
    if kernel.variance_floor is not None:
        raise UnsupportedModelError("[inference/marginal.py] a variance floor breaks conjugacy with the baseline")


def nig_posterior(n: int, shifted_sum: float, shifted_sumsq: float, baseline: BaselineSpec) -> PosteriorNig:
    """Posterior hyperparameters from sums of (y - mean0) and (y - mean0)^2.

    Working with data centred at mean0 keeps the sums of squares well conditioned.
    """
    kappa_n = baseline.kappa0 + n
    shape_n = baseline.shape0 + 0.5 * n
    if n == 0:
        return PosteriorNig(baseline.mean0, kappa_n, shape_n, baseline.scale0)
    centred_mean = shifted_sum / n
    ss = max(shifted_sumsq - shifted_sum * centred_mean, 0.0)
    scale_n = baseline.scale0 + 0.5 * ss + baseline.kappa0 * n * centred_mean ** 2 / (2.0 * kappa_n)
    mean_n = baseline.mean0 + n * centred_mean / kappa_n
    return PosteriorNig(mean_n, kappa_n, shape_n, scale_n)


def log_marginal_from_stats(n: int, shifted_sum: float, shifted_sumsq: float, baseline: BaselineSpec) -> float:
    if n == 0:
        return 0.0
    post = nig_posterior(n, shifted_sum, shifted_sumsq, baseline)
    return (gammaln(post.shape) - gammaln(baseline.shape0)
            + baseline.shape0 * math.log(baseline.scale0) - post.shape * math.log(post.scale)
            + 0.5 * (math.log(baseline.kappa0) - math.log(post.kappa))
            - 0.5 * n * LOG_2PI)


def segment_marginal_likelihood(data_slice: Union[Dataset, Sequence[float]], baseline: BaselineSpec,
                                kernel: KernelSpec) -> float:
    """log of int prod_i K(y_i | theta) dG0(theta) for one segment; 0 for an empty one.

    Args:
        data_slice: A Dataset or the bare observations of the segment
        baseline: Normal-inverse-gamma G0
        kernel: Normal kernel without a variance floor

    Raises:
        UnsupportedModelError: For any non-conjugate configuration
    """
    check_conjugate(baseline, kernel)
    values = data_slice.values if isinstance(data_slice, Dataset) else np.asarray(data_slice, dtype=float)
    shifted = values - baseline.mean0
    return log_marginal_from_stats(int(shifted.size), math.fsum(shifted), math.fsum(shifted * shifted), baseline)


class SegmentStatistics:
    """Prefix sums of the centred observations so any segment's marginal costs O(1)."""

    def __init__(self, values: Sequence[float], baseline: BaselineSpec):
        self.baseline = baseline
        shifted = np.asarray(values, dtype=float) - baseline.mean0
        self._sum = np.concatenate(([0.0], np.cumsum(shifted)))
        self._sumsq = np.concatenate(([0.0], np.cumsum(shifted * shifted)))

    def stats(self, lo: int, hi: int):
        """(n, sum, sum of squares) of observations lo..hi-1."""
        return hi - lo, float(self._sum[hi] - self._sum[lo]), float(self._sumsq[hi] - self._sumsq[lo])

    def log_marginal(self, lo: int, hi: int) -> float:
        return log_marginal_from_stats(*self.stats(lo, hi), self.baseline)

    def posterior(self, lo: int, hi: int) -> PosteriorNig:
        return nig_posterior(*self.stats(lo, hi), self.baseline)
