# models/geometric.py
"""Geometric continuous-time model.

Weights w_j(t) = lambda_t (1 - lambda_t)^(j-1), with lambda_t a two-type
Wright-Fisher diffusion with Beta(a, b) stationary law. Transitions over a
lag h are sampled exactly through the mixture representation

    m ~ p_h(m),  k | m ~ Binomial(m, lambda_s),  lambda_t | m, k ~ Beta(a + k, b + m - k)

where p_h(m) = (a+b)_m e^{-mch} (1 - e^{-ch})^{a+b} / m! is the negative
binomial law with size a+b that counts failures with failure probability
e^{-ch}.
"""
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, stats
from scipy.special import gammaln

from engine.errors import DomainError
from engine.random_stream import RandomStream
from engine.weights import WeightVector
from models.base_model import BaseWeightProcess

LAMBDA_EPS = 1e-15


@dataclass(frozen=True)
class DiffusionParams:
    a: float = 1.0
    b: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        for name in ("a", "b", "c"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"[models/geometric.py] diffusion parameter {name} must be > 0, got {value}")

    @property
    def size(self) -> float:
        """a + b, the negative binomial size of p_h."""
        return self.a + self.b


@dataclass(frozen=True)
class DiffusionState:
    t: float
    lam: float

    def __post_init__(self):
        if not (0.0 < self.lam < 1.0):
            raise DomainError(f"[models/geometric.py] lambda must lie in (0, 1), got {self.lam}")
        if not (self.t >= 0 and math.isfinite(self.t)):
            raise DomainError(f"[models/geometric.py] time must be finite and >= 0, got {self.t}")


@dataclass(frozen=True)
class TransitionDraw:
    m: int
    k: int

    def __post_init__(self):
        if not (0 <= self.k <= self.m):
            raise DomainError(f"[models/geometric.py] need 0 <= k <= m, got k={self.k}, m={self.m}")


def _clamp(lam: float) -> float:
    return min(max(float(lam), LAMBDA_EPS), 1.0 - LAMBDA_EPS)


def _check_lag(h: float, allow_zero: bool = False) -> None:
    if not math.isfinite(h) or h < 0 or (h == 0 and not allow_zero):
        raise DomainError(f"[models/geometric.py] lag h must be {'>= 0' if allow_zero else '> 0'}, got {h}")


def stationary_sample(params: DiffusionParams, rng: RandomStream, t: float = 0.0) -> DiffusionState:
    """Draw lambda from the stationary Beta(a, b) law."""
    return DiffusionState(t, _clamp(rng.generator.beta(params.a, params.b)))


def jump_pmf(params: DiffusionParams, h: float, m: Union[int, np.ndarray]) -> Union[float, np.ndarray]:
    """p_h(m), evaluated in log space so (a+b)_m never overflows."""
    _check_lag(h)
    m_arr = np.asarray(m, dtype=float)
    if np.any(m_arr < 0) or np.any(m_arr != np.floor(m_arr)):
        raise DomainError("[models/geometric.py] m must be a non-negative integer")
    r = params.size
    ch = params.c * h
    log_p = (gammaln(r + m_arr) - gammaln(r) - gammaln(m_arr + 1.0)
             - m_arr * ch + r * math.log(-math.expm1(-ch)))
    out = np.exp(log_p)
    return float(out) if np.ndim(m) == 0 else out


def jump_sample(params: DiffusionParams, h: float, rng: RandomStream, size: Optional[int] = None):
    """Draw m ~ p_h: negative binomial failures before a+b successes, success prob 1 - e^{-ch}."""
    _check_lag(h)
    success = -math.expm1(-params.c * h)
    draws = rng.generator.negative_binomial(params.size, success, size=size)
    return int(draws) if size is None else draws


def transition_draw(params: DiffusionParams, lam_s: float, h: float, rng: RandomStream) -> TransitionDraw:
    """The latent (m, k) of one transition started at lambda_s."""
    m = jump_sample(params, h, rng)
    k = int(rng.generator.binomial(m, lam_s)) if m > 0 else 0
    return TransitionDraw(m, k)


def transition_sample(params: DiffusionParams, state: DiffusionState, h: float,
                      rng: RandomStream) -> DiffusionState:
    """Exact draw of lambda_{t+h} given lambda_t; a zero lag returns the same lambda."""
    _check_lag(h, allow_zero=True)
    if h == 0:
        return state
    draw = transition_draw(params, state.lam, h, rng)
    lam = rng.generator.beta(params.a + draw.k, params.b + draw.m - draw.k)
    return DiffusionState(state.t + h, _clamp(lam))


def geometric_weights(lam: float, K: int) -> WeightVector:
    """w_j = lam (1 - lam)^(j-1) for j = 1..K with tail (1 - lam)^K."""
    if not (0.0 < lam < 1.0):
        raise DomainError(f"[models/geometric.py] lambda must lie in (0, 1), got {lam}")
    if K < 1:
        raise DomainError(f"[models/geometric.py] K must be >= 1, got {K}")
    log_q = math.log1p(-lam)
    j = np.arange(K, dtype=float)
    weights = lam * np.exp(j * log_q)
    return WeightVector(weights, math.exp(K * log_q))


def sample_z_exact(lam: float, rng: RandomStream, size: Optional[int] = None):
    """Component index with Pr(j) = lam (1 - lam)^(j-1), no truncation."""
    if not (0.0 < lam <= 1.0):
        raise DomainError(f"[models/geometric.py] lambda must lie in (0, 1], got {lam}")
    draws = rng.generator.geometric(lam, size=size)
    return int(draws) if size is None else draws


def overlap_closed_form(lam1: float, lam2: float) -> float:
    """sum_j lam1 (1-lam1)^(j-1) lam2 (1-lam2)^(j-1) = lam1 lam2 / (lam1 + lam2 - lam1 lam2)."""
    for lam in (lam1, lam2):
        if not (0.0 < lam <= 1.0):
            raise DomainError(f"[models/geometric.py] lambda must lie in (0, 1], got {lam}")
    return lam1 * lam2 / (lam1 + lam2 - lam1 * lam2)


def simulate_path(params: DiffusionParams, grid: Sequence[float], rng: RandomStream) -> List[DiffusionState]:
    """lambda along an increasing grid: stationary start, exact transitions between points."""
    times = [float(t) for t in grid]
    if not times:
        raise DomainError("[models/geometric.py] grid must be non-empty")
    if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
        raise DomainError("[models/geometric.py] grid must be strictly increasing")
    path = [stationary_sample(params, rng, t=times[0])]
    for t0, t1 in zip(times, times[1:]):
        path.append(transition_sample(params, path[-1], t1 - t0, rng))
    return path


def stationary_self_overlap(a: float, b: float) -> float:
    """E{lam / (2 - lam)} under Beta(a, b): the h -> 0 limit of E{D(h)}."""
    beta = stats.beta(a, b)
    value, _ = integrate.quad(lambda x: x / (2.0 - x) * beta.pdf(x), 0.0, 1.0, limit=200)
    return float(value)


class GeometricModel(BaseWeightProcess):
    """Geometric weights driven by a stationary Wright-Fisher diffusion."""

    def __init__(self, a: float = 1.0, b: float = 1.0, c: float = 1.0):
        super().__init__(a=a, b=b, c=c)
        self.diffusion = DiffusionParams(a, b, c)

    @property
    def name(self) -> str:
        return "geometric"

    @property
    def description(self) -> str:
        return "Geometric weights lam_t (1 - lam_t)^(j-1) with Wright-Fisher lam_t."

    def _lambda_pair(self, t: float, h: float, rng: RandomStream) -> Tuple[DiffusionState, DiffusionState]:
        start = stationary_sample(self.diffusion, rng, t=t)
        return start, transition_sample(self.diffusion, start, h, rng)

    def sample_overlap(self, t: float, h: float, rng: RandomStream,
                       horizon: Optional[float] = None) -> Tuple[float, Dict]:
        start, end = self._lambda_pair(t, h, rng)
        return overlap_closed_form(start.lam, end.lam), {}

    def sample_component_pair(self, t: float, h: float, rng: RandomStream) -> Tuple[int, int]:
        start, end = self._lambda_pair(t, h, rng)
        return sample_z_exact(start.lam, rng), sample_z_exact(end.lam, rng)

    def sample_weights(self, times: Sequence[float], K: int, rng: RandomStream) -> List[WeightVector]:
        return [geometric_weights(state.lam, K) for state in simulate_path(self.diffusion, times, rng)]

    def analytic_expected_overlap(self, h: float) -> Optional[float]:
        # D(0) = lam / (2 - lam) under the stationary law; no closed form for h > 0
        if h == 0:
            return stationary_self_overlap(self.diffusion.a, self.diffusion.b)
        return None
