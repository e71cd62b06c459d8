# engine/weights.py
"""Mixture-weight vectors and the statistics every weight process shares.

A realization of the weights {w_j(t)} is always held truncated at some K with
the remaining mass kept explicitly in ``tail_mass``; every quantity computed
from a truncated vector comes back with a bound on the truncation error.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, NamedTuple, Optional, Sequence, Union

import numpy as np

from engine.errors import AlignmentError, DomainError, TruncationError
from engine.random_stream import RandomStream
from utils.estimators import mean_and_se

NORMALIZATION_TOL = 1e-12

# Rule drawing an index beyond K once the tail has been selected
TailRule = Callable[[RandomStream], int]


class BoundedValue(NamedTuple):
    """A value computed from truncated weights plus its truncation error bound."""
    value: float
    bound: float


@dataclass(frozen=True)
class WeightVector:
    """Truncated weight sequence w_1..w_K with explicit tail mass.

    ``labels`` optionally names the atom behind each entry (e.g. the jump
    index of an NRM weight); unlabelled vectors use positions 1..K.
    """
    weights: np.ndarray
    tail_mass: float = 0.0
    labels: Optional[tuple] = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "tail_mass", float(self.tail_mass))
        if w.ndim != 1:
            raise DomainError("[engine/weights.py] weights must be one-dimensional")
        if w.size and (w.min() < 0.0 or w.max() > 1.0):
            raise DomainError("[engine/weights.py] every weight must lie in [0, 1]")
        if not (0.0 <= self.tail_mass <= 1.0):
            raise DomainError(f"[engine/weights.py] tail_mass must lie in [0, 1], got {self.tail_mass}")
        total = math.fsum(w) + self.tail_mass
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise DomainError(f"[engine/weights.py] weights plus tail must sum to 1, got {total!r}")
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != w.size or len(set(labels)) != len(labels):
                raise AlignmentError("[engine/weights.py] labels must be distinct and match the weights")
            object.__setattr__(self, "labels", labels)

    @property
    def K(self) -> int:
        return int(self.weights.size)

    def index_labels(self) -> tuple:
        return self.labels if self.labels is not None else tuple(range(1, self.K + 1))

    def to_dict(self) -> Dict:
        return {
            "weights": [float(x) for x in self.weights],
            "tail_mass": self.tail_mass,
            "labels": list(self.labels) if self.labels is not None else None,
        }


def point_mass(j: int, K: int) -> WeightVector:
    """Vector putting mass 1 on index j; the mass sits in the tail when j > K."""
    if j < 1:
        raise DomainError(f"[engine/weights.py] component index must be >= 1, got {j}")
    w = np.zeros(K)
    if j <= K:
        w[j - 1] = 1.0
        return WeightVector(w, 0.0)
    return WeightVector(w, 1.0)


def _aligned_pair(w_t: WeightVector, w_th: WeightVector):
    """Return the two weight arrays on a common index set plus the residual bound.

    Vectors are matched by label, unlabelled ones by position 1..K. An entry
    present in one vector only can pair with at most the other vector's tail,
    which is added to the bound.
    """
    if (w_t.labels is None) != (w_th.labels is None):
        raise AlignmentError("[engine/weights.py] cannot align a labelled with an unlabelled weight vector")
    if w_t.labels is None and w_t.K == w_th.K:
        return w_t.weights, w_th.weights, 0.0

    pos_th = {label: i for i, label in enumerate(w_th.index_labels())}
    common_t, common_th, only_t = [], [], []
    for i, label in enumerate(w_t.index_labels()):
        if label in pos_th:
            common_t.append(w_t.weights[i])
            common_th.append(w_th.weights[pos_th.pop(label)])
        else:
            only_t.append(w_t.weights[i])
    only_th = [w_th.weights[i] for i in pos_th.values()]
    residual = (max(only_t, default=0.0) * w_th.tail_mass) + (max(only_th, default=0.0) * w_t.tail_mass)
    return np.asarray(common_t, dtype=float), np.asarray(common_th, dtype=float), residual


def overlap_statistic(w_t: WeightVector, w_th: WeightVector) -> BoundedValue:
    """D(h) = sum_j w_j(t) w_j(t+h) over the materialized indices.

    Returns:
        BoundedValue(sum, bound) with the full-series D in [sum, sum + bound]
    """
    a, b, residual = _aligned_pair(w_t, w_th)
    value = math.fsum(a * b)
    bound = min(w_t.tail_mass, w_th.tail_mass) + residual
    return BoundedValue(min(max(value, 0.0), 1.0), bound)


def sup_weight_diff(w_t: WeightVector, w_th: WeightVector) -> BoundedValue:
    """sup_j |w_j(t+h) - w_j(t)| over materialized indices, with additive uncertainty."""
    a, b, residual = _aligned_pair(w_t, w_th)
    value = float(np.max(np.abs(b - a))) if a.size else 0.0
    bound = max(w_t.tail_mass, w_th.tail_mass)
    # an unmatched index is compared against 0; its partner hides in the other tail
    unmatched = set(w_t.index_labels()).symmetric_difference(w_th.index_labels())
    if unmatched:
        lookup = dict(zip(w_t.index_labels(), w_t.weights))
        lookup.update(zip(w_th.index_labels(), w_th.weights))
        value = max(value, max(float(lookup[label]) for label in unmatched))
    return BoundedValue(value, bound)


def self_overlap(w: WeightVector) -> BoundedValue:
    """sum_j w_j^2, the zero-lag overlap; the tail adds at most tail_mass^2."""
    return BoundedValue(math.fsum(w.weights * w.weights), w.tail_mass * w.tail_mass)


def overlap_upper_bound(w_t: WeightVector, w_th: WeightVector) -> float:
    """sum_j w_j(t)^2 + sup_j |w_j(t+h) - w_j(t)|, an upper bound on D(h)."""
    sq = self_overlap(w_t)
    sup = sup_weight_diff(w_t, w_th)
    return sq.value + sq.bound + sup.value + sup.bound


def sample_component(w: WeightVector, rng: RandomStream, tail_rule: Optional[TailRule] = None,
                     size: Optional[int] = None) -> Union[int, np.ndarray]:
    """Draw component indices j with probability w_j.

    Args:
        w: Weight vector to sample from
        rng: Random stream supplying the uniforms
        tail_rule: Called with ``rng`` whenever a draw lands in the tail; must
            return an index greater than K. Without it a tail draw is an error.
        size: Number of draws; a single int is returned when omitted

    Returns:
        The component index (or its label) for each draw
    """
    gen = rng.generator
    n = 1 if size is None else int(size)
    u = gen.random(n)
    idx = np.searchsorted(np.cumsum(w.weights), u, side="right")
    if w.tail_mass == 0.0 and np.any(w.weights > 0):
        # rounding in the cumulative sum; there is no tail to land in
        idx[idx >= w.K] = int(np.flatnonzero(w.weights)[-1])
    out = np.empty(n, dtype=np.int64)
    in_range = idx < w.K
    out[in_range] = np.asarray(w.index_labels(), dtype=np.int64)[idx[in_range]]
    for i in np.flatnonzero(~in_range):
        if tail_rule is None:
            raise TruncationError("[engine/weights.py] draw fell in the tail and no extension rule was supplied")
        j = int(tail_rule(rng))
        if j <= w.K and w.labels is None:
            raise TruncationError(f"[engine/weights.py] tail rule returned index {j} inside the materialized range")
        out[i] = j
    return int(out[0]) if size is None else out


@dataclass(frozen=True)
class OverlapEstimate:
    """Monte Carlo summary of E{D(h)} over independent replicates."""
    h: float
    mean: float
    std_error: float
    n_reps: int
    diagnostics: Dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 <= self.mean <= 1.0):
            raise DomainError(f"[engine/weights.py] overlap mean must lie in [0, 1], got {self.mean}")
        if self.std_error < 0 or self.n_reps < 1:
            raise DomainError("[engine/weights.py] invalid standard error or replicate count")

    def to_dict(self) -> Dict:
        return {
            "h": self.h,
            "mean": self.mean,
            "std_error": self.std_error,
            "n_reps": self.n_reps,
            "diagnostics": dict(self.diagnostics),
        }


def summarize_overlaps(values: Sequence[float], h: float, diagnostics: Optional[Dict] = None) -> OverlapEstimate:
    """Reduce ordered replicate values of D(h) to an OverlapEstimate."""
    mean, se = mean_and_se(values)
    return OverlapEstimate(h=h, mean=min(max(mean, 0.0), 1.0), std_error=se,
                           n_reps=len(values), diagnostics=diagnostics or {})
