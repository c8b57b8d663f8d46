from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from vqtk.core.types import Codebook, TokenGrid
from vqtk.errors import DimensionMismatch
from vqtk.metrics.usage import code_histogram


def principal_axes(x: np.ndarray, n_components: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Top principal axes of the rows of ``x``.

    Returns ``(mean, components (d, n_components), eigenvalues)`` sorted by
    decreasing variance. Each axis is signed so its largest-magnitude entry is
    positive.
    """
    x = np.asarray(x, dtype=np.float64)
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / max(x.shape[0] - 1, 1)
    eigvals, eigvecs = np.linalg.eigh(0.5 * (cov + cov.T))
    order = np.argsort(eigvals, kind="stable")[::-1][:n_components]
    components = eigvecs[:, order]
    pivots = np.argmax(np.abs(components), axis=0)
    signs = np.sign(components[pivots, np.arange(components.shape[1])])
    signs[signs == 0] = 1.0
    return mean, components * signs, eigvals[order]


def export_codebook_projection(book: Codebook, tokens: Optional[Sequence[TokenGrid]] = None) -> pd.DataFrame:
    """One row per code: id, usage count in ``tokens`` and its first two PCA coordinates.

    ``frame.attrs["explained_variance"]`` holds the share of total variance
    captured by the two components.
    """
    if book.dim < 2:
        raise DimensionMismatch(f"projection needs codebook dim >= 2, got {book.dim}")
    x = book.vectors.astype(np.float64)
    mean, components, top = principal_axes(x, 2)
    coords = (x - mean) @ components

    usage = code_histogram(tokens, book.size) if tokens else np.zeros(book.size, dtype=np.int64)
    frame = pd.DataFrame({
        "code": np.arange(book.size),
        "usage": usage,
        "pc1": coords[:, 0],
        "pc2": coords[:, 1],
    })
    centered = x - mean
    total = float(np.square(centered).sum() / max(book.size - 1, 1))
    frame.attrs["explained_variance"] = float(top.sum() / total) if total > 0 else 0.0
    return frame
