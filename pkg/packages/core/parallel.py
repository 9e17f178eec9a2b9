"""
Thread fan-out for embarrassingly parallel work.

Results always come back in input order, so downstream reductions do not
depend on how many workers ran.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

import psutil

log = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "TWJSCC_THREADS"


def worker_count(requested: Optional[int] = None) -> int:
    """--threads, then TWJSCC_THREADS, then logical cores."""
    if requested is not None and requested > 0:
        return requested
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            value = int(env)
            if value > 0:
                return value
        except ValueError:
            log.warning(f"Ignoring non-integer {THREADS_ENV}={env!r}")
    try:
        cores = psutil.cpu_count(logical=True)
    except Exception:
        cores = None
    return cores or 1


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None) -> List[R]:
    seq = list(items)
    n = worker_count(workers)
    if n <= 1 or len(seq) <= 1:
        return [fn(x) for x in seq]
    with ThreadPoolExecutor(max_workers=min(n, len(seq)), thread_name_prefix="twjscc") as pool:
        return list(pool.map(fn, seq))
