"""Fréchet distance between Gaussian fits of two feature populations:

    ||mu_a - mu_b||^2 + tr(S_a) + tr(S_b) - 2 tr((S_a S_b)^(1/2))

This is the FID formula evaluated on whatever features the caller supplies;
applied to original versus reconstructed features it is the rFID role.
"""
import logging
from typing import Sequence, Tuple, Union

import numpy as np

from vqtk.core.types import FeatureMap, GaussianStats, pool_vectors
from vqtk.errors import DimensionMismatch, InsufficientData, MatrixSqrtError, NotPositiveSemiDefinite

logger = logging.getLogger(__name__)

PSD_TOLERANCE = 1e-8
DISTANCE_SLACK = 1e-6
SQRT_MAX_ITERS = 100
SQRT_RESIDUAL_LIMIT = 1e-6
SQRT_CONVERGED = 1e-13
SQRT_OFFSET = 1e-6


def gaussian_stats(vectors: Union[np.ndarray, Sequence[Sequence[float]]]) -> GaussianStats:
    """Sample mean and unbiased covariance of an (n, d) array of vectors."""
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatch(f"expected an (n, d) array of vectors, got shape {x.shape}")
    if x.shape[0] < 2:
        raise InsufficientData(f"Gaussian statistics need at least 2 vectors, got {x.shape[0]}")
    cov = np.atleast_2d(np.cov(x, rowvar=False))
    cov = 0.5 * (cov + cov.T)
    return GaussianStats(dim=x.shape[1], mean=x.mean(axis=0), covariance=cov, count=x.shape[0])


def feature_stats(maps: Sequence[FeatureMap]) -> GaussianStats:
    return gaussian_stats(pool_vectors(maps))


def _clamp_psd(cov: np.ndarray, label: str) -> np.ndarray:
    eigvals, eigvecs = np.linalg.eigh(cov)
    lowest = float(eigvals.min())
    if lowest < -PSD_TOLERANCE:
        raise NotPositiveSemiDefinite(f"covariance {label} has eigenvalue {lowest:.3g} < -{PSD_TOLERANCE}")
    if lowest >= 0.0:
        return cov
    clamped = (eigvecs * np.maximum(eigvals, 0.0)) @ eigvecs.T
    return 0.5 * (clamped + clamped.T)


def sqrtm_newton_schulz(matrix: np.ndarray, max_iters: int = SQRT_MAX_ITERS) -> Tuple[np.ndarray, float]:
    """Coupled Newton-Schulz square root of a matrix with nonnegative real spectrum.

    The input is pre-scaled by its Frobenius norm. Returns ``(root, residual)``
    with residual = ||root @ root - matrix||_F / ||matrix||_F; raises
    MatrixSqrtError when no iterate reaches 1e-6. A run that blows up keeps
    the best iterate seen before it did.
    """
    a = np.asarray(matrix, dtype=np.float64)
    dim = a.shape[0]
    norm = float(np.linalg.norm(a, "fro"))
    if norm == 0.0:
        return np.zeros_like(a), 0.0

    identity = np.eye(dim)
    y = a / norm
    z = identity.copy()
    scale = np.sqrt(norm)
    best, best_residual = None, np.inf

    for _ in range(max_iters):
        t = 0.5 * (3.0 * identity - z @ y)
        y = y @ t
        z = t @ z
        root = y * scale
        residual = float(np.linalg.norm(root @ root - a, "fro") / norm)
        if not np.isfinite(residual):
            break
        if residual < best_residual:
            best, best_residual = root, residual
        if residual < SQRT_CONVERGED:
            break

    if best is None or best_residual > SQRT_RESIDUAL_LIMIT:
        raise MatrixSqrtError(
            f"matrix square root did not converge: relative residual {best_residual:.3g} after {max_iters} iterations"
        )
    return best, best_residual


def _sqrt_of_product(cov_a: np.ndarray, cov_b: np.ndarray) -> Tuple[np.ndarray, float]:
    # S_a^(1/2) S_b S_a^(1/2) is symmetric PSD and shares its nonzero spectrum with S_a S_b
    eigvals, eigvecs = np.linalg.eigh(cov_a)
    half = (eigvecs * np.sqrt(np.maximum(eigvals, 0.0))) @ eigvecs.T
    product = half @ cov_b @ half
    return sqrtm_newton_schulz(0.5 * (product + product.T))


def frechet_distance(a: GaussianStats, b: GaussianStats) -> float:
    if a.dim != b.dim:
        raise DimensionMismatch(f"cannot compare {a.dim}-dim and {b.dim}-dim statistics")
    cov_a = _clamp_psd(a.covariance, "a")
    cov_b = _clamp_psd(b.covariance, "b")

    diff = a.mean - b.mean
    try:
        root, residual = _sqrt_of_product(cov_a, cov_b)
    except MatrixSqrtError as e:
        logger.warning(f"{e}; retrying with {SQRT_OFFSET:g} added to both covariance diagonals")
        offset = np.eye(a.dim) * SQRT_OFFSET
        root, residual = _sqrt_of_product(cov_a + offset, cov_b + offset)
    value = float(diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2.0 * np.trace(root))
    logger.debug(f"Fréchet distance {value:.6g} (sqrt residual {residual:.2g})")

    if value < 0.0:
        if value < -DISTANCE_SLACK:
            raise MatrixSqrtError(f"Fréchet distance came out negative ({value:.3g})")
        value = 0.0
    return value
