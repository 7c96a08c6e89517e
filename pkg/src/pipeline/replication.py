import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, TypeVar

T = TypeVar("T")

logger = logging.getLogger(__name__)


def run_replications(task: Callable[[int], T], n_reps: int, workers: int = 1) -> List[T]:
    """Evaluate ``task(index)`` for every replication index; results come back in index order.

    Each task derives its own random stream from its index, so the output does
    not depend on ``workers``.
    """
    if workers <= 1 or n_reps < 2:
        return [task(index) for index in range(n_reps)]
    logger.debug("running %d replications on %d workers", n_reps, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, range(n_reps)))
