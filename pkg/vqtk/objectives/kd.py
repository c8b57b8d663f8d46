"""Feature-reconstruction objective: negative cosine similarity between a
reconstructed map and a teacher map.

``per-position`` averages one cosine per spatial position. ``flat`` treats each
map as a single h*w*d vector.
"""
import logging
from typing import Literal, Tuple

import numpy as np

from vqtk.core.types import FeatureMap
from vqtk.errors import NearZeroNorm, ShapeMismatch, UsageError

logger = logging.getLogger(__name__)

CosineMode = Literal["per-position", "flat"]
NORM_EPS = 1e-12


def _rows(recon: FeatureMap, teacher: FeatureMap, mode: CosineMode) -> Tuple[np.ndarray, np.ndarray]:
    if recon.data.shape != teacher.data.shape:
        raise ShapeMismatch(f"reconstruction {recon.data.shape} and teacher {teacher.data.shape} differ")
    if mode not in ("per-position", "flat"):
        raise UsageError(f"unknown cosine mode {mode!r}")
    r = recon.vectors.astype(np.float64)
    t = teacher.vectors.astype(np.float64)
    if mode == "flat":
        r, t = r.reshape(1, -1), t.reshape(1, -1)
    return r, t


def _squared_norms(r: np.ndarray, t: np.ndarray, mode: CosineMode) -> Tuple[np.ndarray, np.ndarray]:
    r2 = np.square(r).sum(axis=1)
    t2 = np.square(t).sum(axis=1)
    for name, sq in (("reconstruction", r2), ("teacher", t2)):
        small = np.flatnonzero(np.sqrt(sq) <= NORM_EPS)
        if small.size:
            where = "the flattened map" if mode == "flat" else f"position {int(small[0])}"
            raise NearZeroNorm(f"{name} vector at {where} has norm <= {NORM_EPS}")
    return r2, t2


def kd_loss(recon: FeatureMap, teacher: FeatureMap, mode: CosineMode = "per-position") -> float:
    """Mean of -cos(recon, teacher); lies in [-1, 1]."""
    r, t = _rows(recon, teacher, mode)
    r2, t2 = _squared_norms(r, t, mode)
    cos = (r * t).sum(axis=1) / np.sqrt(r2 * t2)
    return float(-np.mean(cos))


def kd_loss_gradient(recon: FeatureMap, teacher: FeatureMap, mode: CosineMode = "per-position") -> np.ndarray:
    """Gradient of :func:`kd_loss` with respect to ``recon``, shaped like the map.

    d(-cos)/dr = -(t / (|r||t|) - cos * r / |r|^2), divided by the number of
    cosines averaged. The result is orthogonal to r at every position.
    """
    r, t = _rows(recon, teacher, mode)
    r2, t2 = _squared_norms(r, t, mode)
    norm_product = np.sqrt(r2 * t2)
    cos = (r * t).sum(axis=1) / norm_product
    grad = -(t / norm_product[:, None] - (cos / r2)[:, None] * r) / r.shape[0]
    return grad.reshape(recon.data.shape)
