# utils/worker_pool.py
"""Thread pool that maps replicate functions over stream ids in a fixed order."""
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

logger = logging.getLogger(__name__)

THREADS_ENV_VAR = "TIMEMIXLAB_THREADS"

R = TypeVar('R')


def resolve_threads(configured: Optional[int] = None) -> int:
    """Thread count from the environment override, else the configured value, else 1."""
    env_value = os.environ.get(THREADS_ENV_VAR)
    if env_value:
        try:
            threads = int(env_value)
        except ValueError:
            logger.warning("ignoring %s=%r: not an integer", THREADS_ENV_VAR, env_value)
        else:
            if threads >= 1:
                return threads
            logger.warning("ignoring %s=%r: must be >= 1", THREADS_ENV_VAR, env_value)
    return max(1, int(configured or 1))


class WorkerPool:
    """Runs independent replicates, returning results in submission order.

    Each task builds its own RandomStream from its stream id, so the results
    do not depend on the thread count or on completion order.
    """

    def __init__(self, threads: int = 1):
        self.threads = max(1, int(threads))

    def map(self, fn: Callable[[int], R], stream_ids: Iterable[int]) -> List[R]:
        ids = list(stream_ids)
        if self.threads == 1 or len(ids) < 2:
            return [fn(i) for i in ids]
        logger.debug("dispatching %d tasks to %d threads", len(ids), self.threads)
        with ThreadPoolExecutor(max_workers=self.threads) as executor:
            # Executor.map yields in input order regardless of completion order
            return list(executor.map(fn, ids))

    def __repr__(self) -> str:
        return f"WorkerPool(threads={self.threads})"


SERIAL = WorkerPool(1)
