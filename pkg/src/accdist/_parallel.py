"""Order-preserving parallel map bounded by the ACCDIST_THREADS variable.

Results come back in input order and every work item is independent, so
outputs are identical whatever the thread count (0 or unset = auto).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

_AUTO_CAP = 8


def thread_count() -> int:
    raw = os.environ.get("ACCDIST_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"ACCDIST_THREADS must be an integer, got {raw!r}")
    if n < 0:
        raise ValueError("ACCDIST_THREADS must be >= 0")
    if n == 0:
        return min(os.cpu_count() or 1, _AUTO_CAP)
    return n


def ordered_map(fn, items) -> list:
    """Apply ``fn`` to ``items``, preserving order; threads per configuration."""
    items = list(items)
    workers = thread_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
