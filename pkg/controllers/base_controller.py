# controllers/base_controller.py
import logging
from typing import Any, Dict, Optional

from config.schemas import MODEL_NAMES
from data.output_manager import OutputManager, run_metadata
from engine.errors import UnsupportedModelError
from engine.random_stream import RandomStream
from models.base_model import BaseWeightProcess
from models.registry import registry as model_registry
from utils.config_manager import ConfigManager
from utils.worker_pool import WorkerPool, resolve_threads

logger = logging.getLogger(__name__)

# Config keys feeding each model's constructor
MODEL_PARAM_KEYS = {
    "geometric": ("a", "b", "c"),
    "nrm": ("decay", "mass", "jump_floor", "tol_rel"),
    "changepoint": ("rate",),
}


class BaseController:
    """Base controller interface that every command controller implements.

    Validates the configuration for its command before any work starts, then
    owns the run's root RandomStream, worker pool and output manager.
    """

    command: str = ""

    def __init__(self, config_manager: ConfigManager):
        """Validate the configuration for this controller's command.

        Args:
            config_manager: Loaded (not yet validated) configuration

        Raises:
            ConfigError: If the configuration does not fit the command schema
        """
        self.config_manager = config_manager
        self.config: Dict[str, Any] = config_manager.validate(self.command)
        self.config_hash = config_manager.config_hash()
        self.base_seed: int = self.config["base_seed"]
        self.rng = RandomStream(self.base_seed)
        self.pool = WorkerPool(resolve_threads(self.config.get("threads")))
        self.output = OutputManager(run_metadata(self.command, self.config_hash, self.base_seed))

    def model_params(self, name: str) -> Dict[str, Any]:
        if name not in MODEL_PARAM_KEYS:
            raise UnsupportedModelError(f"[controllers/base_controller.py] unknown model '{name}'")
        return {key: self.config[key] for key in MODEL_PARAM_KEYS[name]}

    def build_model(self, name: str, params: Optional[Dict[str, Any]] = None) -> BaseWeightProcess:
        return model_registry.create_model(name, **(params if params is not None else self.model_params(name)))

    def build_models(self) -> Dict[str, BaseWeightProcess]:
        """All three models, in their fixed report order."""
        return {name: self.build_model(name) for name in MODEL_NAMES}

    def run(self) -> int:
        """Run the command and return the process exit code.

        This method should be overridden by subclasses.
        """
        raise NotImplementedError

    def execute(self) -> int:
        logger.info("%s started (config %s, base_seed %d, %s)", self.command, self.config_hash[:12],
                    self.base_seed, self.pool)
        code = self.run()
        logger.info("%s finished with exit code %d", self.command, code)
        return code
