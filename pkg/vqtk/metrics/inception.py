import logging
from typing import Tuple

import numpy as np
import pandas as pd

from vqtk.errors import EmptyData, IoError, NotStochastic

logger = logging.getLogger(__name__)

ROW_SUM_ATOL = 1e-9


def check_prob_matrix(probs) -> np.ndarray:
    """Validate a row-stochastic (samples x classes) matrix."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] == 0 or p.shape[1] == 0:
        raise EmptyData(f"expected a nonempty (samples, classes) matrix, got shape {p.shape}")
    if not np.isfinite(p).all() or np.any(p < 0.0):
        raise NotStochastic("probabilities must be finite and nonnegative")
    sums = p.sum(axis=1)
    off = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_ATOL)
    if off.size:
        raise NotStochastic(f"row {int(off[0])} sums to {sums[off[0]]!r}, not 1 within {ROW_SUM_ATOL}")
    return p


def _xlogy_ratio(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """p * log(p / q) with 0 log 0 = 0."""
    out = np.zeros_like(p)
    mask = p > 0.0
    out[mask] = p[mask] * np.log(p[mask] / np.broadcast_to(q, p.shape)[mask])
    return out


def inception_score(probs) -> float:
    """exp(mean over rows of KL(p(y|x) || p(y))), p(y) being the column mean."""
    p = check_prob_matrix(probs)
    marginal = p.mean(axis=0)
    kl = _xlogy_ratio(p, marginal).sum(axis=1)
    return float(np.exp(kl.mean()))


def inception_score_splits(probs, splits: int = 10) -> Tuple[float, float]:
    """Mean and standard deviation of the score over ``splits`` contiguous row blocks."""
    p = check_prob_matrix(probs)
    if splits < 1 or splits > p.shape[0]:
        raise EmptyData(f"cannot split {p.shape[0]} rows into {splits} parts")
    scores = [inception_score(part) for part in np.array_split(p, splits)]
    return float(np.mean(scores)), float(np.std(scores))


def read_prob_matrix(path) -> np.ndarray:
    """Load probabilities from CSV: one row per sample, one column per class, no header."""
    try:
        frame = pd.read_csv(path, header=None)
    except OSError as e:
        raise IoError(f"cannot read {path}: {e.strerror or e}") from e
    except (ValueError, pd.errors.ParserError) as e:
        raise NotStochastic(f"{path} is not a numeric probability table: {e}") from e
    if not all(np.issubdtype(dtype, np.number) for dtype in frame.dtypes):
        raise NotStochastic(f"{path} has non-numeric entries")
    logger.debug(f"Loaded {frame.shape[0]}x{frame.shape[1]} probability matrix from {path}")
    return check_prob_matrix(frame.to_numpy(dtype=np.float64))
