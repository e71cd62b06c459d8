# utils/logger.py
import logging
import sys

# "[module][line] message", the prefix every error message also carries
LOG_FORMAT = "[%(name)s][%(lineno)d] %(message)s"


def setup_logging(level: int = logging.WARNING) -> None:
    """Install a single stderr handler on the root logger; safe to call twice."""
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, "_timemixlab", False):
            root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._timemixlab = True
    root.addHandler(handler)
    root.setLevel(level)


def level_from_flags(verbose: bool = False, debug: bool = False) -> int:
    if debug:
        return logging.DEBUG
    if verbose:
        return logging.INFO
    return logging.WARNING
