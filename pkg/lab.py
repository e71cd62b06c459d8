# lab.py
import argparse
import logging
import sys
from typing import List, Optional

from config.defaults import TOOL_NAME, TOOL_VERSION
from controllers.experiment_controller import DichotomyController, Figure1Controller
from controllers.inference_controller import InferenceController
from controllers.simulation_controller import SimulationController
from controllers.validation_controller import ValidationController
from engine.errors import ConfigError, DataError, LabError, PropertyCheckFailure
from models.registry import registry as model_registry
from utils.config_manager import ConfigManager
from utils.logger import level_from_flags, setup_logging

logger = logging.getLogger(__name__)

CONTROLLERS = {
    "simulate": SimulationController,
    "dichotomy": DichotomyController,
    "figure1": Figure1Controller,
    "infer": InferenceController,
    "validate": ValidationController,
}

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_DATA, EXIT_PROPERTY = 0, 1, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=TOOL_NAME,
                                     description="Time-varying mixture weights: simulation, experiments and inference")
    parser.add_argument("--version", action="version", version=f"{TOOL_NAME} {TOOL_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "draw one weight trace (and a dataset for the change-point model)",
        "dichotomy": "estimate E{D(h)} over an h grid for all three models",
        "figure1": "component indices of the geometric model along a convergent time grid",
        "infer": "posterior sampling of change points from a t,y dataset",
        "validate": "run the property suite",
    }
    for name, text in helps.items():
        epilog = None
        if name == "simulate":
            epilog = "models: " + "; ".join(f"{key} ({doc})" for key, doc in model_registry.get_available_models())
        p = sub.add_parser(name, help=text, epilog=epilog)
        p.add_argument("--config", help="flat key = value configuration file")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override one configuration key (repeatable)")
        p.add_argument("--verbose", action="store_true", help="log progress at INFO level")
        p.add_argument("--debug", action="store_true", help="log at DEBUG level")
    return parser


def exit_code_for(error: LabError) -> int:
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, DataError):
        return EXIT_DATA
    if isinstance(error, PropertyCheckFailure):
        return EXIT_PROPERTY
    return EXIT_ERROR


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(level_from_flags(args.verbose, args.debug))

    try:
        config = ConfigManager()
        if args.config:
            config.load_file(args.config)
        config.apply_overrides(args.overrides)
        controller = CONTROLLERS[args.command](config)
        return controller.execute()
    except LabError as e:
        logger.error("%s", e)
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
