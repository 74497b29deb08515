"""Thread-pool helpers honoring the SADDLE_THREADS cap.

Work items are independent and results are reduced order-preservingly, so
parallel execution never changes outputs, only wall time. SADDLE_THREADS
caps the pool size; unset means one worker per CPU (up to 8).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_VAR = "SADDLE_THREADS"


def worker_count(task_count: int) -> int:
    cap = os.environ.get(ENV_VAR)
    if cap is not None:
        try:
            cap = max(1, int(cap))
        except ValueError:
            cap = 1
    else:
        cap = min(os.cpu_count() or 1, 8)
    return max(1, min(cap, task_count))


def parallel_map(fn, items):
    """Map fn over items, preserving order. Serial when one worker suffices."""
    items = list(items)
    workers = worker_count(len(items))
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
