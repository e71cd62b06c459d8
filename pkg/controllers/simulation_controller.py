# controllers/simulation_controller.py
import logging
import os
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from controllers.base_controller import BaseController
from data.output_manager import write_dataset
from engine.mixture import AtomStore, BaselineSpec, KernelSpec
from engine.weights import WeightVector
from models.changepoint import GapRate, generate_data, indicator_weights, sample_partition

logger = logging.getLogger(__name__)

WEIGHTS_HEADER = ["t", "j", "w_j", "tail"]

# Substreams of the run's root stream
WEIGHTS_STREAM, ATOMS_STREAM, DATA_STREAM = 0, 1, 2


def weight_rows(times: Sequence[float], trace: Sequence[WeightVector]) -> Iterator[Tuple]:
    """Long-format rows (t, j, w_j, tail) of a weight trace."""
    for t, w in zip(times, trace):
        for j, wj in zip(w.index_labels(), w.weights):
            yield float(t), int(j), float(wj), w.tail_mass


def evaluation_times(horizon: float, n_times: int) -> List[float]:
    """n_times evenly spaced points on (0, horizon], ending at horizon."""
    return (horizon * np.arange(1, n_times + 1) / n_times).tolist()


class SimulationController(BaseController):
    """Draws one realization of the configured model and writes its weight trace.

    For the change-point model it also draws a dataset from the same partition.
    """

    command = "simulate"

    def run(self) -> int:
        name = self.config["model"]
        horizon, K = self.config["horizon"], self.config["K"]
        times = evaluation_times(horizon, self.config["n_times"])
        out_dir = self.config["output"]

        if name == "changepoint":
            partition = sample_partition(GapRate(self.config["rate"]), horizon, self.rng.substream(WEIGHTS_STREAM))
            trace = [indicator_weights(partition, t, K) for t in times]
            baseline = BaselineSpec(mean0=self.config["mean0"], kappa0=self.config["kappa0"],
                                    shape0=self.config["shape0"], scale0=self.config["scale0"])
            atoms = AtomStore(baseline, self.rng.substream(ATOMS_STREAM))
            data = generate_data(partition, atoms, KernelSpec(), times, self.rng.substream(DATA_STREAM))
            write_dataset(os.path.join(out_dir, "dataset.csv"), data, self.output)
            logger.info("partition with %d change points up to %g", len(partition.taus), horizon)
        else:
            model = self.build_model(name)
            trace = model.sample_weights(times, K, self.rng.substream(WEIGHTS_STREAM))

        self.output.write_csv(os.path.join(out_dir, "weights.csv"), WEIGHTS_HEADER, weight_rows(times, trace))
        return 0
