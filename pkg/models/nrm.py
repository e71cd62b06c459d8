# models/nrm.py
"""Normalized random measure (NRM) continuous-time model.

Jumps (tau_l, J_l) arrive as a Poisson process on time x size with intensity
decay * w(J), where w is the gamma-process Levy density M J^-1 e^-J. The
weight of jump l at time t is

    w_l(t) = 1(tau_l <= t) e^{-decay (t - tau_l)} J_l / sum_k 1(tau_k <= t) e^{-decay (t - tau_k)} J_k

Only jumps above the floor eps are simulated; the window is extended into the
past by a lookback so that pre-window jumps are negligible at the window start.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import exp1, logsumexp

from engine.errors import DomainError, NoActiveJumpError, UnsupportedModelError
from engine.random_stream import RandomStream
from engine.weights import OverlapEstimate, WeightVector, sample_component, summarize_overlaps
from models.base_model import BaseWeightProcess
from utils.worker_pool import SERIAL, WorkerPool

logger = logging.getLogger(__name__)

MAX_RESAMPLES = 1000
MIN_REPS = 100

# Inverse-tail table: log E1(x) on a log-spaced grid, refined by Newton steps
_TABLE_MAX = 60.0
_NEWTON_STEPS = 4


@dataclass(frozen=True)
class LevySpec:
    """Gamma-process Levy density w(J) = mass * J^-1 e^-J restricted to J > jump_floor."""
    family: str = "gamma"
    mass: float = 1.0
    jump_floor: float = 1e-4

    def __post_init__(self):
        if self.family != "gamma":
            raise UnsupportedModelError(f"[models/nrm.py] unsupported Levy family '{self.family}'")
        if not self.mass > 0:
            raise DomainError(f"[models/nrm.py] Levy mass must be > 0, got {self.mass}")
        if not self.jump_floor > 0:
            raise DomainError(f"[models/nrm.py] jump_floor must be > 0, got {self.jump_floor}")

    def tail_integral(self) -> float:
        """int_eps^inf w(J) dJ = mass * E1(eps)."""
        return self.mass * float(exp1(self.jump_floor))

    def discarded_mass_rate(self) -> float:
        """Upper bound mass * eps on int_0^eps J w(J) dJ per unit decay-time."""
        return self.mass * self.jump_floor


@dataclass(frozen=True)
class NrmParams:
    decay: float = 1.0
    levy: LevySpec = field(default_factory=LevySpec)
    tol_rel: float = 1e-10
    mass_ratio: float = 1.0

    def __post_init__(self):
        if not (self.decay > 0 and math.isfinite(self.decay)):
            raise DomainError(f"[models/nrm.py] decay must be > 0, got {self.decay}")
        if not (0.0 < self.tol_rel < 1.0):
            raise DomainError(f"[models/nrm.py] tol_rel must lie in (0, 1), got {self.tol_rel}")
        if not (self.mass_ratio > self.tol_rel and math.isfinite(self.mass_ratio)):
            raise DomainError(f"[models/nrm.py] mass_ratio must exceed tol_rel, got {self.mass_ratio}")

    @property
    def lookback(self) -> float:
        """Length L = ln(R / tol_rel) / decay of the pre-window stretch to simulate.

        Jumps born more than L before the window keep at most a fraction
        e^{-decay L} = tol_rel / R of their size. R = ``mass_ratio`` is the expected
        total mass relative to the mass that must be resolved. The stationary
        expected total mass is the gamma mass parameter M itself, and the default
        R = 1 measures the discarded contribution against it.
        """
        return math.log(self.mass_ratio / self.tol_rel) / self.decay


@dataclass(frozen=True)
class JumpSet:
    """Jumps sorted by birth time, complete above the floor over ``window``."""
    taus: np.ndarray
    sizes: np.ndarray
    window: Tuple[float, float]

    def __post_init__(self):
        taus = np.array(self.taus, dtype=float)
        sizes = np.array(self.sizes, dtype=float)
        taus.setflags(write=False)
        sizes.setflags(write=False)
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "window", (float(self.window[0]), float(self.window[1])))
        if taus.shape != sizes.shape or taus.ndim != 1:
            raise DomainError("[models/nrm.py] taus and sizes must be one-dimensional and of equal length")
        if self.window[0] > self.window[1]:
            raise DomainError(f"[models/nrm.py] window {self.window} is reversed")
        if sizes.size:
            if sizes.min() <= 0:
                raise DomainError("[models/nrm.py] jump sizes must be > 0")
            if taus.min() < self.window[0] or taus.max() > self.window[1]:
                raise DomainError("[models/nrm.py] every birth time must lie in the window")
            if np.any(np.diff(taus) < 0):
                raise DomainError("[models/nrm.py] jumps must be sorted by birth time")

    def __len__(self) -> int:
        return int(self.taus.size)

    @property
    def is_empty(self) -> bool:
        return self.taus.size == 0

    def n_active(self, t: float) -> int:
        return int(np.searchsorted(self.taus, t, side="right"))


@lru_cache(maxsize=16)
def _inverse_table(floor: float) -> Tuple[np.ndarray, np.ndarray]:
    """Grid and log E1 on it, shared across calls with the same floor."""
    grid = np.geomspace(floor, max(_TABLE_MAX, 2.0 * floor), 2048)
    log_e1 = np.log(exp1(grid))
    grid.setflags(write=False)
    log_e1.setflags(write=False)
    return grid, log_e1


def sample_jump_sizes(levy: LevySpec, n: int, gen: np.random.Generator) -> np.ndarray:
    """Draw n sizes from w(J) / int_eps^inf w restricted to J > eps.

    The survival function is E1(x) / E1(eps); it is inverted by interpolating a
    tabulated log E1 and polishing with Newton steps on log E1(x) = log target.
    """
    if n == 0:
        return np.empty(0)
    eps = levy.jump_floor
    # 1 - U lies in (0, 1], so the log target is finite
    log_target = np.log1p(-gen.random(n)) + math.log(float(exp1(eps)))
    grid, log_e1 = _inverse_table(eps)
    # log E1 decreases along the grid; np.interp needs increasing abscissae
    x = np.interp(log_target, log_e1[::-1], grid[::-1])
    for _ in range(_NEWTON_STEPS):
        e1 = exp1(x)
        g = np.log(e1) - log_target
        # d/dx log E1(x) = -e^{-x} / (x E1(x))
        x = np.maximum(x + g * x * e1 * np.exp(x), eps)
    return x


def simulate_jumps(params: NrmParams, window: Tuple[float, float], rng: RandomStream,
                   extend: bool = True) -> JumpSet:
    """Simulate all jumps above the floor with birth times in ``window``.

    Args:
        params: Decay rate and Levy measure
        window: (t_min, t_max) the weights will be evaluated on
        rng: Stream owned by this realization
        extend: Extend the window backward by the lookback

    Returns:
        JumpSet over the (possibly extended) window; may be empty
    """
    t_min, t_max = float(window[0]), float(window[1])
    if not (math.isfinite(t_min) and math.isfinite(t_max)) or t_min > t_max:
        raise DomainError(f"[models/nrm.py] window must satisfy t_min <= t_max, got {window}")
    if t_min == t_max:
        return JumpSet(np.empty(0), np.empty(0), (t_min, t_max))
    if extend:
        t_min -= params.lookback

    gen = rng.generator
    expected = params.decay * (t_max - t_min) * params.levy.tail_integral()
    n = int(gen.poisson(expected))
    taus = np.sort(gen.uniform(t_min, t_max, size=n))
    sizes = sample_jump_sizes(params.levy, n, gen)
    if n == 0:
        logger.debug("empty jump set on window (%g, %g)", t_min, t_max)
    return JumpSet(taus, sizes, (t_min, t_max))


def _check_time(jumps: JumpSet, t: float) -> None:
    if not (jumps.window[0] <= t <= jumps.window[1]):
        raise DomainError(f"[models/nrm.py] t={t} lies outside the jump window {jumps.window}")


def nrm_weight_array(jumps: JumpSet, t: float, decay: float) -> np.ndarray:
    """Normalized weights of every jump at time t, zero for jumps born after t.

    Masses are normalized in log space from log J_l + decay * tau_l; the common
    factor e^{-decay t} cancels, so with no births in (t, t+h] the two weight
    arrays are identical.
    """
    _check_time(jumps, t)
    n_active = jumps.n_active(t)
    if n_active == 0:
        raise NoActiveJumpError(f"[models/nrm.py] no jump born at or before t={t}")
    log_mass = np.log(jumps.sizes[:n_active]) + decay * jumps.taus[:n_active]
    out = np.zeros(len(jumps))
    out[:n_active] = np.exp(log_mass - logsumexp(log_mass))
    return out


def nrm_total_mass(jumps: JumpSet, t: float, decay: float) -> float:
    """Denominator sum_l 1(tau_l <= t) e^{-decay (t - tau_l)} J_l; finite and positive."""
    _check_time(jumps, t)
    n_active = jumps.n_active(t)
    total = math.fsum(jumps.sizes[:n_active] * np.exp(-decay * (t - jumps.taus[:n_active])))
    if not (total > 0 and math.isfinite(total)):
        raise NoActiveJumpError(f"[models/nrm.py] total mass at t={t} is {total}")
    return total


def nrm_weights(jumps: JumpSet, t: float, decay: float, K: int) -> WeightVector:
    """The K largest weights at t, labelled by jump index, with the rest in the tail.

    Jump indices are 1-based positions in birth order, so labels stay stable
    across evaluation times of the same JumpSet.
    """
    if K < 1:
        raise DomainError(f"[models/nrm.py] K must be >= 1, got {K}")
    full = nrm_weight_array(jumps, t, decay)
    n_active = jumps.n_active(t)
    # stable sort: ties keep birth order
    order = np.argsort(-full[:n_active], kind="stable")
    top, rest = order[:K], order[K:]
    tail = math.fsum(full[rest]) if rest.size else 0.0
    return WeightVector(full[top], min(tail, 1.0), labels=tuple(int(i) + 1 for i in top))


def nrm_overlap(jumps: JumpSet, t: float, h: float, decay: float) -> float:
    """D(h) = sum_l w_l(t) w_l(t+h) over the full jump set."""
    if not (h >= 0 and math.isfinite(h)):
        raise DomainError(f"[models/nrm.py] lag h must be >= 0, got {h}")
    w_t = nrm_weight_array(jumps, t, decay)
    w_th = w_t if h == 0 else nrm_weight_array(jumps, t + h, decay)
    return min(max(math.fsum(w_t * w_th), 0.0), 1.0)


def _active_jump_set(params: NrmParams, t: float, t_end: float,
                     rng: RandomStream) -> Tuple[JumpSet, int]:
    """Simulate on (t - lookback, t_end] until a jump is born at or before t.

    Returns the set and the number of redraws it took.
    """
    window = (t - params.lookback, max(t, t_end))
    for resampled in range(MAX_RESAMPLES):
        jumps = simulate_jumps(params, window, rng, extend=False)
        if jumps.n_active(t) > 0:
            return jumps, resampled
    raise NoActiveJumpError(
        f"[models/nrm.py] no active jump at t={t} after {MAX_RESAMPLES} draws; increase mass or decay"
    )


def _replicate_end(t: float, h: float, horizon: Optional[float]) -> float:
    return t + h if horizon is None else max(t + h, float(horizon))


def sample_nrm_overlap(params: NrmParams, t: float, h: float, rng: RandomStream,
                       horizon: Optional[float] = None) -> Tuple[float, Dict]:
    """One replicate of D(h) with its truncation diagnostics."""
    jumps, resampled = _active_jump_set(params, t, _replicate_end(t, h, horizon), rng)
    value = nrm_overlap(jumps, t, h, params.decay)
    width = jumps.window[1] - jumps.window[0]
    return value, {
        "n_jumps": len(jumps),
        "resampled": resampled,
        "discarded_mass_bound": params.levy.discarded_mass_rate() * params.decay * width,
    }


def aggregate_diagnostics(params: NrmParams, per_replicate: Sequence[Dict]) -> Dict:
    """Fold per-replicate diagnostics into the summary stored on an OverlapEstimate."""
    n_jumps = [d["n_jumps"] for d in per_replicate]
    return {
        "lookback": params.lookback,
        "jump_floor": params.levy.jump_floor,
        "mean_jumps": math.fsum(n_jumps) / len(n_jumps),
        "max_jumps": max(n_jumps),
        "resampled": int(sum(d["resampled"] for d in per_replicate)),
        "discarded_mass_bound": max(d["discarded_mass_bound"] for d in per_replicate),
    }


def estimate_expected_overlap_nrm(params: NrmParams, t: float, h: float, n_reps: int, rng: RandomStream,
                                  min_reps: int = MIN_REPS, horizon: Optional[float] = None,
                                  pool: WorkerPool = SERIAL) -> OverlapEstimate:
    """Monte Carlo E{D(h)} over independent jump sets.

    Replicate i uses substream i of ``rng``. Passing the same ``horizon`` for
    several lags makes every replicate reuse one jump set across lags, so the
    resulting estimates are pathwise comparable.
    """
    if n_reps < min_reps:
        raise DomainError(f"[models/nrm.py] n_reps must be >= {min_reps}, got {n_reps}")

    def replicate(i: int) -> Tuple[float, Dict]:
        return sample_nrm_overlap(params, t, h, rng.substream(i), horizon=horizon)

    results = pool.map(replicate, range(n_reps))
    diagnostics = aggregate_diagnostics(params, [d for _, d in results])
    if diagnostics["resampled"]:
        logger.info("nrm h=%g: %d replicates resampled for lack of an active jump", h, diagnostics["resampled"])
    return summarize_overlaps([v for v, _ in results], h, diagnostics)


class NrmModel(BaseWeightProcess):
    """Normalized gamma-process jumps with exponential decay."""

    def __init__(self, decay: float = 1.0, mass: float = 1.0, jump_floor: float = 1e-4, tol_rel: float = 1e-10):
        super().__init__(decay=decay, mass=mass, jump_floor=jump_floor, tol_rel=tol_rel)
        self.nrm = NrmParams(decay, LevySpec("gamma", mass, jump_floor), tol_rel)

    @property
    def name(self) -> str:
        return "nrm"

    @property
    def description(self) -> str:
        return "Normalized decaying gamma-process jumps (Ornstein-Uhlenbeck type weights)."

    def sample_overlap(self, t: float, h: float, rng: RandomStream,
                       horizon: Optional[float] = None) -> Tuple[float, Dict]:
        return sample_nrm_overlap(self.nrm, t, h, rng, horizon=horizon)

    def sample_component_pair(self, t: float, h: float, rng: RandomStream) -> Tuple[int, int]:
        jumps, _ = _active_jump_set(self.nrm, t, t + h, rng)
        labels = tuple(range(1, len(jumps) + 1))
        w_t = WeightVector(nrm_weight_array(jumps, t, self.nrm.decay), 0.0, labels)
        w_th = WeightVector(nrm_weight_array(jumps, t + h, self.nrm.decay), 0.0, labels)
        return sample_component(w_t, rng), sample_component(w_th, rng)

    def sample_weights(self, times: Sequence[float], K: int, rng: RandomStream) -> List[WeightVector]:
        grid = sorted(float(t) for t in times)
        if not grid:
            raise DomainError("[models/nrm.py] times must be non-empty")
        jumps, _ = _active_jump_set(self.nrm, grid[0], grid[-1], rng)
        return [nrm_weights(jumps, t, self.nrm.decay, K) for t in times]
