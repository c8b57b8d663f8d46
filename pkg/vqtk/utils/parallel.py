"""Thread-capped, order-preserving map over row blocks.

Results are concatenated in block order, so any reduction done afterwards sees
the same operands in the same order whatever ``n_jobs`` is.
"""
from typing import Callable, List, Sequence, TypeVar

import numpy as np
from joblib import Parallel, delayed

from vqtk.config import settings

T = TypeVar("T")


def row_blocks(n_rows: int, row_cost: int, max_elements: int = 0) -> List[slice]:
    """Split ``n_rows`` into slices holding at most ``max_elements`` scalars each."""
    max_elements = max_elements or settings.CHUNK_ELEMENTS
    step = max(1, max_elements // max(1, row_cost))
    return [slice(start, min(start + step, n_rows)) for start in range(0, n_rows, step)]


def map_blocks(fn: Callable[[slice], T], blocks: Sequence[slice], n_jobs: int = 1) -> List[T]:
    if n_jobs <= 1 or len(blocks) <= 1:
        return [fn(block) for block in blocks]
    return Parallel(n_jobs=n_jobs, backend="threading")(delayed(fn)(block) for block in blocks)


def nearest_rows(
    vectors: np.ndarray,
    codes: np.ndarray,
    n_jobs: int = 1,
    max_elements: int = 0,
) -> tuple:
    """Exhaustive nearest-code search in float64.

    Returns ``(indices, squared_distances)``. Squared distances are summed from
    explicit differences rather than the ||x||^2 - 2xc + ||c||^2 expansion, and
    ties resolve to the lowest code index (``argmin`` keeps the first minimum).
    """
    x = np.asarray(vectors, dtype=np.float64)
    c = np.asarray(codes, dtype=np.float64)
    n, d = x.shape
    blocks = row_blocks(n, c.shape[0] * d, max_elements)

    def _assign(block: slice):
        diff = x[block, None, :] - c[None, :, :]
        dist = np.square(diff).sum(axis=-1)
        idx = np.argmin(dist, axis=1)
        return idx, dist[np.arange(idx.size), idx]

    parts = map_blocks(_assign, blocks, n_jobs)
    if not parts:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.float64)
    return (
        np.concatenate([p[0] for p in parts]).astype(np.int64),
        np.concatenate([p[1] for p in parts]),
    )
