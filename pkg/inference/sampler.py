# inference/sampler.py
"""Metropolis-within-Gibbs sampler for change points inside the observed window.

Segment parameters are integrated out, so the state is the sorted set of
change points in (0, W) with W = t_n, plus the gap rate lambda. One iteration
is a shift move, a birth-or-death move, and a conjugate Gamma update of lambda.
"""
import logging
import math
from bisect import insort
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.special import gammaln
from tqdm import tqdm

from engine.errors import DataError, DomainError
from engine.mixture import BaselineSpec, KernelSpec, Theta
from engine.random_stream import RandomStream
from inference.marginal import SegmentStatistics, check_conjugate
from models.changepoint import Dataset
from utils.worker_pool import SERIAL, WorkerPool

logger = logging.getLogger(__name__)

MOVES = ("shift", "birth", "death")


@dataclass(frozen=True)
class InferenceConfig:
    """Priors and run lengths for the change-point sampler.

    ``rate_shape`` and ``rate_rate`` are the Gamma prior on lambda.
    ``fixed_rate`` freezes lambda at that value and skips its update;
    ``use_likelihood = False`` samples from the prior.
    """
    rate_shape: float = 1.0
    rate_rate: float = 1.0
    baseline: BaselineSpec = field(default_factory=BaselineSpec)
    kernel: KernelSpec = field(default_factory=KernelSpec)
    n_iterations: int = 5000
    n_burnin: int = 1000
    proposal_scale: float = 0.5
    use_likelihood: bool = True
    fixed_rate: Optional[float] = None
    draw_theta: bool = True
    progress: bool = False

    def __post_init__(self):
        if not (self.n_iterations > self.n_burnin >= 0):
            raise DomainError(
                f"[inference/sampler.py] need n_iterations > n_burnin >= 0, got {self.n_iterations}, {self.n_burnin}"
            )
        for name in ("rate_shape", "rate_rate", "proposal_scale"):
            if not getattr(self, name) > 0:
                raise DomainError(f"[inference/sampler.py] {name} must be > 0, got {getattr(self, name)}")
        if self.fixed_rate is not None and not self.fixed_rate > 0:
            raise DomainError(f"[inference/sampler.py] fixed_rate must be > 0, got {self.fixed_rate}")
        check_conjugate(self.baseline, self.kernel)

    @property
    def n_retained(self) -> int:
        return self.n_iterations - self.n_burnin


@dataclass
class PosteriorDraws:
    """Retained iterations of one or more chains, in chain then iteration order."""
    taus: List[Tuple[float, ...]]
    rates: List[float]
    window: float
    log_posteriors: List[float] = field(default_factory=list)
    thetas: List[List[Theta]] = field(default_factory=list)
    iterations: List[int] = field(default_factory=list)
    chains: List[int] = field(default_factory=list)
    acceptance: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.taus) != len(self.rates):
            raise DomainError("[inference/sampler.py] taus and rates must have one entry per draw")
        n = len(self.taus)
        if not self.iterations:
            self.iterations = list(range(n))
        if not self.chains:
            self.chains = [0] * n
        for taus in self.taus:
            if any(b <= a for a, b in zip(taus, taus[1:])) or (taus and not (0.0 < taus[0] and taus[-1] <= self.window)):
                raise DomainError("[inference/sampler.py] change points must be increasing inside (0, window]")

    def __len__(self) -> int:
        return len(self.taus)

    @property
    def counts(self) -> np.ndarray:
        return np.array([len(t) for t in self.taus], dtype=int)

    def to_records(self) -> List[Dict]:
        """One JSON-ready record per retained iteration."""
        records = []
        for i in range(len(self)):
            record = {
                "chain": self.chains[i],
                "iteration": self.iterations[i],
                "taus": list(self.taus[i]),
                "lambda": self.rates[i],
                "log_posterior": self.log_posteriors[i] if self.log_posteriors else None,
            }
            if self.thetas:
                record["thetas"] = [list(theta) for theta in self.thetas[i]]
            records.append(record)
        return records


def merge_draws(parts: List[PosteriorDraws]) -> PosteriorDraws:
    """Concatenate post-burn-in draws of several chains; acceptance rates are averaged."""
    if not parts:
        raise DomainError("[inference/sampler.py] nothing to merge")
    acceptance = {move: math.fsum(p.acceptance.get(move, 0.0) for p in parts) / len(parts) for move in MOVES}
    return PosteriorDraws(
        taus=[t for p in parts for t in p.taus],
        rates=[r for p in parts for r in p.rates],
        window=parts[0].window,
        log_posteriors=[v for p in parts for v in p.log_posteriors],
        thetas=[th for p in parts for th in p.thetas],
        iterations=[i for p in parts for i in p.iterations],
        chains=[c for p in parts for c in p.chains],
        acceptance=acceptance,
    )


def birth_probability(k: int) -> float:
    return 1.0 if k == 0 else 0.5


def death_probability(k: int) -> float:
    return 0.0 if k == 0 else 0.5


class ChangepointSampler:
    """One Markov chain over (change points, lambda) for a fixed dataset."""

    def __init__(self, data: Dataset, config: InferenceConfig, rng: RandomStream, chain: int = 0):
        if len(data) < 2:
            raise DataError(f"[inference/sampler.py] inference needs at least 2 observations, got {len(data)}")
        non_positive = np.flatnonzero(data.times <= 0)
        if non_positive.size:
            # times increase strictly, so the offenders form a prefix; report its last row
            last = int(non_positive[-1])
            raise DataError(f"[inference/sampler.py] observation times must be > 0; {non_positive.size} are not "
                            f"(last t={data.times[last]:g})", row=last + 1)
        self.data = data
        self.config = config
        self.gen = rng.generator
        self.chain = chain
        self.window = float(data.times[-1])
        self.segments = SegmentStatistics(data.values, config.baseline)
        self.taus: List[float] = []
        self.rate = config.fixed_rate if config.fixed_rate is not None else config.rate_shape / config.rate_rate
        self._proposed = dict.fromkeys(MOVES, 0)
        self._accepted = dict.fromkeys(MOVES, 0)

    # --- likelihood pieces ---

    def _obs_index(self, tau: float) -> int:
        """Number of observations at or before tau."""
        return int(np.searchsorted(self.data.times, tau, side="right"))

    def _segment_ll(self, left: float, right: float) -> float:
        """Log marginal of the observations in (left, right]."""
        if not self.config.use_likelihood:
            return 0.0
        lo = 0 if left <= 0.0 else self._obs_index(left)
        hi = len(self.data) if right >= self.window else self._obs_index(right)
        return self.segments.log_marginal(lo, hi)

    def _bounds(self) -> List[float]:
        return [0.0] + self.taus + [self.window]

    def log_likelihood(self) -> float:
        bounds = self._bounds()
        return math.fsum(self._segment_ll(a, b) for a, b in zip(bounds, bounds[1:]))

    def log_posterior(self) -> float:
        k = len(self.taus)
        value = self.log_likelihood() + k * math.log(self.rate) - self.rate * self.window
        if self.config.fixed_rate is None:
            a, b = self.config.rate_shape, self.config.rate_rate
            value += a * math.log(b) - gammaln(a) + (a - 1.0) * math.log(self.rate) - b * self.rate
        return value

    def _accept(self, log_ratio: float) -> bool:
        return log_ratio >= 0.0 or math.log(self.gen.random()) < log_ratio

    # --- moves ---

    def shift(self) -> None:
        """Move one change point uniformly within +-proposal_scale, staying between its neighbours."""
        k = len(self.taus)
        if k == 0:
            return
        self._proposed["shift"] += 1
        j = int(self.gen.integers(k))
        old = self.taus[j]
        new = old + self.gen.uniform(-self.config.proposal_scale, self.config.proposal_scale)
        left = self.taus[j - 1] if j > 0 else 0.0
        right = self.taus[j + 1] if j + 1 < k else self.window
        if not (left < new < right):
            return
        log_ratio = (self._segment_ll(left, new) + self._segment_ll(new, right)
                     - self._segment_ll(left, old) - self._segment_ll(old, right))
        if self._accept(log_ratio):
            self.taus[j] = new
            self._accepted["shift"] += 1

    def birth(self) -> None:
        """Add a change point uniformly inside a uniformly chosen gap."""
        self._proposed["birth"] += 1
        k = len(self.taus)
        bounds = self._bounds()
        g = int(self.gen.integers(k + 1))
        left, right = bounds[g], bounds[g + 1]
        gap = right - left
        new = self.gen.uniform(left, right)
        if not (left < new < right):
            return
        log_ratio = (self._segment_ll(left, new) + self._segment_ll(new, right) - self._segment_ll(left, right)
                     + math.log(self.rate * gap)
                     + math.log(death_probability(k + 1)) - math.log(birth_probability(k)))
        if self._accept(log_ratio):
            insort(self.taus, new)
            self._accepted["birth"] += 1

    def death(self) -> None:
        """Remove a uniformly chosen change point, merging its two segments."""
        self._proposed["death"] += 1
        k = len(self.taus)
        j = int(self.gen.integers(k))
        bounds = self._bounds()
        left, old, right = bounds[j], bounds[j + 1], bounds[j + 2]
        log_ratio = (self._segment_ll(left, right) - self._segment_ll(left, old) - self._segment_ll(old, right)
                     + math.log(birth_probability(k - 1)) - math.log(death_probability(k))
                     - math.log(self.rate * (right - left)))
        if self._accept(log_ratio):
            del self.taus[j]
            self._accepted["death"] += 1

    def update_rate(self) -> None:
        """lambda | K ~ Gamma(shape + K, rate + W)."""
        if self.config.fixed_rate is not None:
            return
        shape = self.config.rate_shape + len(self.taus)
        rate = self.config.rate_rate + self.window
        self.rate = float(self.gen.gamma(shape, 1.0 / rate))

    def draw_thetas(self) -> List[Theta]:
        """Per-segment (mean, variance) from the normal-inverse-gamma conditional."""
        bounds = self._bounds()
        thetas = []
        for left, right in zip(bounds, bounds[1:]):
            lo = 0 if left <= 0.0 else self._obs_index(left)
            hi = len(self.data) if right >= self.window else self._obs_index(right)
            post = self.segments.posterior(lo, hi)
            variance = 1.0 / self.gen.gamma(post.shape, 1.0 / post.scale)
            mean = self.gen.normal(post.mean, math.sqrt(variance / post.kappa))
            thetas.append((float(mean), float(variance)))
        return thetas

    def step(self) -> None:
        self.shift()
        if self.gen.random() < birth_probability(len(self.taus)):
            self.birth()
        else:
            self.death()
        self.update_rate()

    def run(self) -> PosteriorDraws:
        config = self.config
        draws = PosteriorDraws(taus=[], rates=[], window=self.window, iterations=[], chains=[])
        iterations = tqdm(range(config.n_iterations), desc=f"chain {self.chain}", disable=not config.progress,
                          leave=False)
        for it in iterations:
            self.step()
            if it < config.n_burnin:
                continue
            draws.taus.append(tuple(self.taus))
            draws.rates.append(self.rate)
            draws.log_posteriors.append(self.log_posterior())
            draws.iterations.append(it)
            draws.chains.append(self.chain)
            if config.draw_theta:
                draws.thetas.append(self.draw_thetas())
        draws.acceptance = {
            move: (self._accepted[move] / self._proposed[move]) if self._proposed[move] else 0.0 for move in MOVES
        }
        logger.info("chain %d acceptance: %s", self.chain,
                    ", ".join(f"{m}={r:.3f}" for m, r in draws.acceptance.items()))
        return draws


def run_sampler(data: Dataset, config: InferenceConfig, rng: RandomStream, chain: int = 0) -> PosteriorDraws:
    """Run one chain and return its post-burn-in draws."""
    return ChangepointSampler(data, config, rng, chain=chain).run()


def run_chains(data: Dataset, config: InferenceConfig, rng: RandomStream, n_chains: int = 1,
               pool: WorkerPool = SERIAL) -> PosteriorDraws:
    """Run independent chains on substreams 0..n_chains-1 and merge them after burn-in."""
    if n_chains < 1:
        raise DomainError(f"[inference/sampler.py] n_chains must be >= 1, got {n_chains}")
    parts = pool.map(lambda c: run_sampler(data, config, rng.substream(c), chain=c), range(n_chains))
    return merge_draws(parts)
