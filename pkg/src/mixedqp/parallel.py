"""Deterministic chunked sample execution.

Monte Carlo loops are split into fixed-size chunks of sample indices; each
chunk's results land in an index-addressed slice of a preallocated array.
The thread count only changes which worker computes a chunk, never the chunk
boundaries, the per-sample random streams, or the reduction order, so outputs
are bit-identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

#: samples per chunk; fixed so results cannot depend on the worker count
CHUNK = 4096


def run_chunked(
    total: int,
    worker: Callable[[int, int], np.ndarray],
    threads: int = 1,
    chunk: int = CHUNK,
) -> np.ndarray:
    """Evaluate ``worker(start, stop)`` over [0, total) in fixed chunks.

    ``worker`` must return the values for sample indices [start, stop) as a
    1-d array and must derive any randomness from the sample index alone.
    """
    if total <= 0:
        return np.empty(0)
    starts = list(range(0, total, chunk))
    out: list[np.ndarray | None] = [None] * len(starts)

    def run_one(i: int) -> None:
        start = starts[i]
        stop = min(start + chunk, total)
        out[i] = np.asarray(worker(start, stop), dtype=float)

    if threads <= 1 or len(starts) == 1:
        for i in range(len(starts)):
            run_one(i)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_one, range(len(starts))))
    return np.concatenate(out)  # type: ignore[arg-type]
