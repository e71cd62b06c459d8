from abc import ABC, abstractmethod
from typing import Dict, List, Optional, Sequence, Tuple

from engine.random_stream import RandomStream
from engine.weights import WeightVector


class BaseWeightProcess(ABC):
    """Base abstract class for all continuous-time weight processes.

    A weight process generates {w_j(t)} for t >= 0 over atoms shared across
    time. Implementations must provide pathwise overlap replicates so the
    experiment controller can estimate E{D(h)} without knowing the model.
    """

    def __init__(self, **params):
        # kept verbatim for reports and the config hash
        self.params = dict(params)

    @property
    @abstractmethod
    def name(self) -> str:
        """Short key the model is registered under and selected by with ``model=``."""

    @property
    @abstractmethod
    def description(self) -> str:
        """How the weights are built, in one line for ``simulate --help``."""

    def describe_params(self) -> Dict:
        """Parameters as plain JSON-ready values."""
        return dict(self.params)

    @abstractmethod
    def sample_overlap(self, t: float, h: float, rng: RandomStream,
                       horizon: Optional[float] = None) -> Tuple[float, Dict]:
        """Draw one realization and return D(h) at time t plus per-replicate diagnostics.

        Args:
            t: Evaluation time
            h: Non-negative lag
            rng: Stream owned by this replicate
            horizon: End of the simulated time window when it should reach past
                t + h; a replicate stream reused with the same horizon yields the
                same realization for every lag (ignored by models without one)

        Returns:
            Tuple of (D(h), diagnostics dict)
        """

    @abstractmethod
    def sample_component_pair(self, t: float, h: float, rng: RandomStream) -> Tuple[int, int]:
        """Draw one realization and independent component indices z(t), z(t+h) from it."""

    @abstractmethod
    def sample_weights(self, times: Sequence[float], K: int, rng: RandomStream) -> List[WeightVector]:
        """Draw one realization and return its weights truncated at K along ``times``."""

    def analytic_expected_overlap(self, h: float) -> Optional[float]:
        """Closed-form E{D(h)} when the model has one, else None."""
        return None
