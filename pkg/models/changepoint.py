# models/changepoint.py
"""Multiple change-point model with exponential gaps.

Gaps eps_j ~ Exponential(rate) give change points tau_j = tau_{j-1} + eps_j
(tau_0 = 0), which partition (0, inf) into A_j = (tau_{j-1}, tau_j]. The
weights are indicators w_j(t) = 1(t in A_j), so z(t) = j iff
tau_{j-1} < t <= tau_j, and D(h) is 1 exactly when no change point falls in
(t, t + h].
"""
import logging
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from engine.errors import DomainError, PartitionExtensionRequired
from engine.mixture import AtomStore, KernelSpec
from engine.random_stream import RandomStream
from engine.weights import WeightVector, point_mass
from models.base_model import BaseWeightProcess

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GapRate:
    rate: float = 1.0

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise DomainError(f"[models/changepoint.py] gap rate must be > 0, got {self.rate}")


@dataclass(frozen=True)
class Partition:
    """Change points tau_1 < tau_2 < ... materialized until one reaches ``horizon``."""
    taus: Tuple[float, ...]
    horizon: float

    def __post_init__(self):
        taus = tuple(float(x) for x in self.taus)
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "horizon", float(self.horizon))
        if not taus:
            raise DomainError("[models/changepoint.py] a partition needs at least one change point")
        if taus[0] <= 0.0 or any(b <= a for a, b in zip(taus, taus[1:])):
            raise DomainError("[models/changepoint.py] change points must be positive and strictly increasing")
        if taus[-1] < self.horizon:
            raise DomainError(
                f"[models/changepoint.py] last change point {taus[-1]} does not cover horizon {self.horizon}"
            )

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(np.concatenate(([0.0], self.taus)))

    def count_in(self, t0: float, t1: float) -> int:
        """Number of change points in (t0, t1]."""
        return bisect_right(self.taus, t1) - bisect_right(self.taus, t0)


@dataclass(frozen=True)
class Dataset:
    """Observations (t_i, y_i) with strictly increasing times."""
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        values = np.array(self.values, dtype=float)
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.ndim != 1 or times.shape != values.shape:
            raise DomainError("[models/changepoint.py] times and values must be one-dimensional and of equal length")
        if times.size < 1:
            raise DomainError("[models/changepoint.py] a dataset needs at least one observation")
        if np.any(np.diff(times) <= 0):
            raise DomainError("[models/changepoint.py] observation times must be strictly increasing")

    def __len__(self) -> int:
        return int(self.times.size)

    def slice(self, start: int, stop: int) -> "Dataset":
        return Dataset(self.times[start:stop], self.values[start:stop])


def _draw_taus(rate: GapRate, start: float, horizon: float, gen: np.random.Generator) -> List[float]:
    """Exponential gaps from ``start`` until a change point reaches ``horizon``."""
    taus: List[float] = []
    last = start
    while last < horizon:
        batch = max(16, int(math.ceil(1.2 * rate.rate * (horizon - last))) + 8)
        points = last + np.cumsum(gen.exponential(1.0 / rate.rate, size=batch))
        stop = int(np.searchsorted(points, horizon, side="left"))
        if stop < batch:
            taus.extend(points[: stop + 1].tolist())
            break
        taus.extend(points.tolist())
        last = float(points[-1])
    return taus


def sample_partition(rate: GapRate, horizon: float, rng: RandomStream) -> Partition:
    """Draw change points with i.i.d. exponential gaps until one is >= horizon."""
    if not (horizon > 0 and math.isfinite(horizon)):
        raise DomainError(f"[models/changepoint.py] horizon must be > 0, got {horizon}")
    return Partition(tuple(_draw_taus(rate, 0.0, horizon, rng.generator)), horizon)


def extend_partition(partition: Partition, horizon: float, rng: RandomStream, rate: GapRate) -> Partition:
    """Continue the gap sequence past the last change point until ``horizon`` is covered.

    Gaps are memoryless and independent, so extending with a fresh stream leaves
    the law of the partition unchanged.
    """
    if horizon <= partition.horizon:
        return partition
    if partition.taus[-1] >= horizon:
        return Partition(partition.taus, horizon)
    extra = _draw_taus(rate, partition.taus[-1], horizon, rng.generator)
    return Partition(partition.taus + tuple(extra), horizon)


def locate(partition: Partition, t: float) -> int:
    """The component index j with tau_{j-1} < t <= tau_j."""
    if not t > 0:
        raise DomainError(f"[models/changepoint.py] t must be > 0, got {t}")
    last_tau = partition.taus[-1]
    if t > last_tau:
        raise PartitionExtensionRequired(
            f"[models/changepoint.py] t={t} lies beyond the last materialized change point {last_tau}",
            t=t, last_tau=last_tau,
        )
    return bisect_left(partition.taus, t) + 1


def indicator_weights(partition: Partition, t: float, K: int) -> WeightVector:
    """Indicator weights at t truncated at K; an index beyond K puts all mass in the tail."""
    if K < 1:
        raise DomainError(f"[models/changepoint.py] K must be >= 1, got {K}")
    j = locate(partition, t)
    if j > K:
        logger.warning("component %d at t=%g lies beyond K=%d: weight carried by the tail", j, t, K)
    return point_mass(j, K)


def overlap_exact(partition: Partition, t: float, h: float) -> int:
    """1 if no change point falls in (t, t + h], else 0."""
    if not (h >= 0 and math.isfinite(h)):
        raise DomainError(f"[models/changepoint.py] lag h must be >= 0, got {h}")
    if h == 0:
        locate(partition, t)
        return 1
    return int(locate(partition, t) == locate(partition, t + h))


def same_component_prob(rate: GapRate, h: float) -> float:
    """P(z(t) = z(t + h)) = e^{-rate h}, for every t by memorylessness."""
    if not (h >= 0 and math.isfinite(h)):
        raise DomainError(f"[models/changepoint.py] lag h must be >= 0, got {h}")
    return math.exp(-rate.rate * h)


def generate_data(partition: Partition, atoms: AtomStore, kernel: KernelSpec,
                  times: Sequence[float], rng: RandomStream) -> Dataset:
    """Draw y_i ~ K(.|theta_{z(t_i)}) at each time; atoms are drawn on first use."""
    grid = np.asarray(times, dtype=float)
    if grid.size == 0:
        raise DomainError("[models/changepoint.py] times must be non-empty")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("[models/changepoint.py] times must be strictly increasing")
    gen = rng.generator
    values = [float(kernel.sample(atoms[locate(partition, float(t))], gen)) for t in grid]
    return Dataset(grid, np.asarray(values))


class ChangepointModel(BaseWeightProcess):
    """Indicator weights on a partition with exponential gaps."""

    def __init__(self, rate: float = 1.0):
        super().__init__(rate=rate)
        self.rate = GapRate(rate)

    @property
    def name(self) -> str:
        return "changepoint"

    @property
    def description(self) -> str:
        return "Indicator weights on a random partition with Exponential(rate) gaps."

    def _partition(self, end: float, rng: RandomStream, horizon: Optional[float] = None) -> Partition:
        return sample_partition(self.rate, end if horizon is None else max(end, float(horizon)), rng)

    def sample_overlap(self, t: float, h: float, rng: RandomStream,
                       horizon: Optional[float] = None) -> Tuple[float, Dict]:
        partition = self._partition(t + h, rng, horizon)
        return float(overlap_exact(partition, t, h)), {}

    def sample_component_pair(self, t: float, h: float, rng: RandomStream) -> Tuple[int, int]:
        partition = self._partition(t + h, rng)
        return locate(partition, t), locate(partition, t + h)

    def sample_weights(self, times: Sequence[float], K: int, rng: RandomStream) -> List[WeightVector]:
        if len(times) == 0:
            raise DomainError("[models/changepoint.py] times must be non-empty")
        partition = self._partition(max(times), rng)
        return [indicator_weights(partition, t, K) for t in times]

    def analytic_expected_overlap(self, h: float) -> Optional[float]:
        return same_component_prob(self.rate, h)
