"""
Path-level parallelism.

Work is split by stream id only; every path is computed by the same
sequential code whatever thread runs it, and results come back in stream
order, so the thread count never changes an output.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

logger = logging.getLogger(__name__)

THREADS_ENV_VAR = 'MULTIFRAC_THREADS'

T = TypeVar('T')


def resolve_threads(threads: Optional[int] = None) -> int:
    """
    Number of worker threads to use.

    An explicit value wins; otherwise MULTIFRAC_THREADS, otherwise the CPU
    count. MULTIFRAC_THREADS also caps an explicit value.
    """
    cap = os.environ.get(THREADS_ENV_VAR)
    limit = None
    if cap:
        try:
            limit = max(1, int(cap))
        except ValueError:
            logger.warning("Ignoring non-integer %s=%r", THREADS_ENV_VAR, cap)
    if threads is None:
        threads = limit if limit is not None else (os.cpu_count() or 1)
    elif limit is not None:
        threads = min(threads, limit)
    return max(1, int(threads))


def map_paths(
    fn: Callable[[int], T],
    stream_ids: Sequence[int],
    threads: Optional[int] = None
) -> List[T]:
    """
    Apply fn to every stream id, possibly concurrently.

    Args:
        fn: per-path work, a pure function of the stream id
        stream_ids: stream ids to process
        threads: worker count (see resolve_threads)

    Returns:
        Results in the order of stream_ids
    """
    workers = min(resolve_threads(threads), max(1, len(stream_ids)))
    if workers == 1:
        return [fn(stream_id) for stream_id in stream_ids]
    logger.debug("Running %d paths on %d threads", len(stream_ids), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, stream_ids))
