# engine/mixture.py
"""Kernel, baseline and atom bookkeeping for the mixture f(y|t) = sum_j w_j(t) K(y|theta_j)."""
import logging
import math
from dataclasses import dataclass
from typing import Dict, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from engine.errors import DomainError, UnsupportedModelError
from engine.random_stream import RandomStream
from engine.weights import WeightVector

logger = logging.getLogger(__name__)

# Kernel parameter theta = (mean, variance)
Theta = Tuple[float, float]


@dataclass(frozen=True)
class BaselineSpec:
    """G_0 over theta = (mean, variance): normal-inverse-gamma.

    variance ~ InvGamma(shape0, scale0), mean | variance ~ N(mean0, variance / kappa0).
    """
    family: str = "normal_inverse_gamma"
    mean0: float = 0.0
    kappa0: float = 0.1
    shape0: float = 2.0
    scale0: float = 1.0

    def __post_init__(self):
        if self.family != "normal_inverse_gamma":
            raise UnsupportedModelError(f"[engine/mixture.py] unsupported baseline family '{self.family}'")
        for name in ("kappa0", "shape0", "scale0"):
            if not getattr(self, name) > 0:
                raise DomainError(f"[engine/mixture.py] baseline hyperparameter {name} must be > 0")

    def draw(self, gen: np.random.Generator) -> Theta:
        variance = 1.0 / gen.gamma(self.shape0, 1.0 / self.scale0)
        mean = gen.normal(self.mean0, math.sqrt(variance / self.kappa0))
        return float(mean), float(variance)

    def to_dict(self) -> Dict:
        return {"family": self.family, "mean0": self.mean0, "kappa0": self.kappa0,
                "shape0": self.shape0, "scale0": self.scale0}


@dataclass(frozen=True)
class KernelSpec:
    """K(y|theta): univariate normal with theta = (mean, variance).

    ``variance_floor`` (optional) restricts the family to variances above the
    floor, which makes sup_theta K(y|theta) finite.
    """
    family: str = "normal"
    variance_floor: Optional[float] = None

    def __post_init__(self):
        if self.family != "normal":
            raise UnsupportedModelError(f"[engine/mixture.py] unsupported kernel family '{self.family}'")
        if self.variance_floor is not None and not self.variance_floor > 0:
            raise DomainError("[engine/mixture.py] variance_floor must be > 0")

    def density(self, y, theta: Theta):
        mean, variance = theta
        if not variance > 0:
            raise DomainError(f"[engine/mixture.py] kernel variance must be > 0, got {variance}")
        return stats.norm.pdf(y, loc=mean, scale=math.sqrt(variance))

    def sample(self, theta: Theta, gen: np.random.Generator, size: Optional[int] = None):
        mean, variance = theta
        return gen.normal(mean, math.sqrt(variance), size=size)

    def sup_density(self) -> float:
        """sup over theta and y of K(y|theta); infinite without a variance floor."""
        if self.variance_floor is None:
            return math.inf
        return 1.0 / math.sqrt(2.0 * math.pi * self.variance_floor)


class AtomStore:
    """Lazily extended atoms theta_1, theta_2, ... drawn i.i.d. from the baseline.

    Atom j is drawn from its own substream of ``stream`` the first time it is
    requested, so the value of theta_j does not depend on the order in which
    atoms are touched. Once drawn an atom never changes.
    """

    def __init__(self, baseline: BaselineSpec, stream: RandomStream,
                 initial: Optional[Sequence[Theta]] = None):
        self.baseline = baseline
        self._stream = stream
        self._atoms: Dict[int, Theta] = {}
        for j, theta in enumerate(initial or (), start=1):
            self._atoms[j] = (float(theta[0]), float(theta[1]))

    def __getitem__(self, j: int) -> Theta:
        if j < 1:
            raise DomainError(f"[engine/mixture.py] atom index must be >= 1, got {j}")
        if j not in self._atoms:
            self._atoms[j] = self.baseline.draw(self._stream.substream(j).generator)
        return self._atoms[j]

    def __len__(self) -> int:
        return len(self._atoms)

    def materialized(self) -> Dict[int, Theta]:
        return dict(self._atoms)


class MixtureDensity(NamedTuple):
    value: float
    bound: float
    bound_available: bool


def mixture_density(w: WeightVector, atoms: AtomStore, kernel: KernelSpec, y: float) -> MixtureDensity:
    """sum_j w_j K(y|theta_j) over the materialized components.

    The omitted tail contributes at most tail_mass * sup K; for an unbounded
    kernel family with a nonzero tail that bound is infinite and flagged.
    """
    labels = w.index_labels()
    terms = [wj * float(kernel.density(y, atoms[int(j)])) for wj, j in zip(w.weights, labels) if wj > 0.0]
    value = math.fsum(terms)
    if w.tail_mass == 0.0:
        return MixtureDensity(value, 0.0, True)
    sup = kernel.sup_density()
    if math.isinf(sup):
        logger.warning("tail mass %.3g with an unbounded kernel: density bound unavailable", w.tail_mass)
        return MixtureDensity(value, math.inf, False)
    return MixtureDensity(value, w.tail_mass * sup, True)
