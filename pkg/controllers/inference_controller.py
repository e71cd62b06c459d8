# controllers/inference_controller.py
import logging
import os

import numpy as np

from controllers.base_controller import BaseController
from data.output_manager import read_dataset
from engine.errors import ConfigError
from engine.mixture import BaselineSpec, KernelSpec
from inference.sampler import InferenceConfig, run_chains
from inference.summary import posterior_summary

logger = logging.getLogger(__name__)


class InferenceController(BaseController):
    """Fits the change-point model to a ``t,y`` dataset and writes draws plus a summary."""

    command = "infer"

    def inference_config(self) -> InferenceConfig:
        cfg = self.config
        if cfg["n_burnin"] >= cfg["n_iterations"]:
            raise ConfigError("[controllers/inference_controller.py] n_burnin must be below n_iterations", field="n_burnin")
        baseline = BaselineSpec(mean0=cfg["mean0"], kappa0=cfg["kappa0"], shape0=cfg["shape0"], scale0=cfg["scale0"])
        return InferenceConfig(
            rate_shape=cfg["rate_shape"],
            rate_rate=cfg["rate_rate"],
            baseline=baseline,
            kernel=KernelSpec(),
            n_iterations=cfg["n_iterations"],
            n_burnin=cfg["n_burnin"],
            proposal_scale=cfg["proposal_scale"],
            use_likelihood=cfg["use_likelihood"],
            fixed_rate=cfg["fixed_rate"],
            progress=cfg["progress"],
        )

    def run(self) -> int:
        data = read_dataset(self.config["input"])
        logger.info("read %d observations from %s", len(data), self.config["input"])
        draws = run_chains(data, self.inference_config(), self.rng, n_chains=self.config["n_chains"], pool=self.pool)

        window = float(data.times[-1])
        n_grid = self.config["grid_points"]
        # left ends of n_grid equal intervals covering (0, t_n]
        grid = (window * np.arange(n_grid) / n_grid).tolist()
        summary = posterior_summary(draws, grid=grid, dt=window / n_grid)

        out_dir = self.config["output"]
        self.output.write_jsonl(os.path.join(out_dir, "draws.jsonl"), draws.to_records())
        self.output.write_json(os.path.join(out_dir, "summary.json"), summary)
        logger.info("modal change-point count %d", summary["modal_count"])
        return 0
