"""Codebooks built directly from features by k-means.

Full-batch Lloyd runs whenever ``batch_size`` covers the pooled data; otherwise
a mini-batch variant with per-cluster counts as the learning-rate schedule.
Centroids come back as a float64 Codebook whose tokenizer is plain
``vq_quantize`` against it.
"""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from vqtk.config import settings
from vqtk.core.types import Codebook, FeatureMap, pool_vectors
from vqtk.errors import DimensionMismatch, InsufficientData, NearZeroNorm
from vqtk.utils.parallel import nearest_rows

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["restart", "iteration", "inertia", "empty_clusters", "reinitialized"]


class KMeansConfig(BaseModel):
    k: int = Field(ge=1)
    max_iters: int = Field(default_factory=lambda: settings.KMEANS_MAX_ITERS, ge=1)
    batch_size: int = Field(default_factory=lambda: settings.KMEANS_BATCH_SIZE, ge=1)
    seed: int = Field(default_factory=lambda: settings.SEED, ge=0)
    tol: float = Field(default_factory=lambda: settings.KMEANS_TOL, ge=0.0)
    reinit_empty: bool = True
    n_init: int = Field(default_factory=lambda: settings.KMEANS_N_INIT, ge=1)
    normalize: bool = False


def _prepare(data: Sequence[FeatureMap], cfg: KMeansConfig) -> np.ndarray:
    x = pool_vectors(data)
    if cfg.k > x.shape[0]:
        raise InsufficientData(f"k={cfg.k} exceeds the {x.shape[0]} pooled feature vectors")
    if cfg.normalize:
        norms = np.sqrt(np.square(x).sum(axis=1))
        if np.any(norms == 0.0):
            raise NearZeroNorm(f"cannot L2-normalize: vector {int(np.argmin(norms))} is zero")
        x = x / norms[:, None]
    return x


def _kmeans_plus_plus(
    x: np.ndarray,
    k: int,
    rng: np.random.Generator,
    start: Optional[np.ndarray],
    n_jobs: int,
) -> np.ndarray:
    """D^2 seeding. ``start`` rows are kept as the first centroids."""
    n, d = x.shape
    centroids = np.empty((k, d), dtype=np.float64)
    if start is not None and len(start):
        m = start.shape[0]
        centroids[:m] = start
        closest = nearest_rows(x, start, n_jobs=n_jobs)[1]
    else:
        first = int(rng.integers(n))
        centroids[0] = x[first]
        closest = np.square(x - x[first]).sum(axis=1)
        m = 1

    for i in range(m, k):
        total = closest.sum()
        if total > 0.0:
            cumulative = np.cumsum(closest)
            pick = int(np.searchsorted(cumulative, rng.random() * total, side="right"))
            pick = min(pick, n - 1)
        else:
            pick = int(rng.integers(n))
        centroids[i] = x[pick]
        closest = np.minimum(closest, np.square(x - x[pick]).sum(axis=1))
    return centroids


def _farthest_points(dist: np.ndarray, count: int) -> np.ndarray:
    """Indices of the ``count`` points farthest from their centroid, stable order."""
    return np.argsort(-dist, kind="stable")[:count]


def _relative_change(previous: Optional[float], current: float) -> float:
    if previous is None:
        return np.inf
    if previous == 0.0:
        return 0.0
    return abs(previous - current) / previous


def _lloyd(x, centroids, cfg, restart, n_jobs) -> Tuple[np.ndarray, List[dict]]:
    rows = []
    previous = None
    for it in range(cfg.max_iters):
        labels, dist = nearest_rows(x, centroids, n_jobs=n_jobs)
        inertia = float(dist.mean())

        counts = np.bincount(labels, minlength=cfg.k)
        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, x)
        filled = counts > 0
        centroids[filled] = sums[filled] / counts[filled, None]

        empty = np.flatnonzero(~filled)
        reinitialized = 0
        if empty.size and cfg.reinit_empty:
            anchors = _farthest_points(dist, empty.size)
            centroids[empty[:anchors.size]] = x[anchors]
            reinitialized = int(anchors.size)

        rows.append({
            "restart": restart, "iteration": it, "inertia": inertia,
            "empty_clusters": int(empty.size), "reinitialized": reinitialized,
        })
        if _relative_change(previous, inertia) < cfg.tol or inertia == 0.0:
            break
        previous = inertia
    return centroids, rows


def _mini_batch(x, centroids, cfg, restart, rng, n_jobs) -> Tuple[np.ndarray, List[dict]]:
    rows = []
    previous = None
    seen = np.zeros(cfg.k, dtype=np.int64)
    for it in range(cfg.max_iters):
        batch = x[np.sort(rng.choice(x.shape[0], size=cfg.batch_size, replace=False))]
        labels, dist = nearest_rows(batch, centroids, n_jobs=n_jobs)
        inertia = float(dist.mean())

        counts = np.bincount(labels, minlength=cfg.k)
        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, batch)
        hit = counts > 0
        total = seen[hit] + counts[hit]
        centroids[hit] = (seen[hit, None] * centroids[hit] + sums[hit]) / total[:, None]
        seen += counts

        never = np.flatnonzero(seen == 0)
        reinitialized = 0
        if never.size and cfg.reinit_empty:
            anchors = _farthest_points(dist, never.size)
            centroids[never[:anchors.size]] = batch[anchors]
            reinitialized = int(anchors.size)

        rows.append({
            "restart": restart, "iteration": it, "inertia": inertia,
            "empty_clusters": int(np.count_nonzero(~hit)), "reinitialized": reinitialized,
        })
        if _relative_change(previous, inertia) < cfg.tol:
            break
        previous = inertia
    return centroids, rows


def kmeans_fit(
    data: Sequence[FeatureMap],
    cfg: KMeansConfig,
    init: Optional[np.ndarray] = None,
    n_jobs: int = 1,
) -> Tuple[Codebook, pd.DataFrame]:
    """Cluster the pooled feature vectors into ``cfg.k`` centroids.

    ``init`` warm-starts the fit: its rows become the first centroids and the
    rest are added by k-means++ seeding. The trace has one row per iteration
    and restart; ``trace.attrs["inertia"]`` is the mean squared distance of the
    returned codebook over the whole pool.
    """
    x = _prepare(data, cfg)
    start = None
    if init is not None:
        start = np.asarray(init, dtype=np.float64)
        if start.ndim != 2 or start.shape[1] != x.shape[1]:
            raise DimensionMismatch(f"warm-start centroids {start.shape} do not match dim {x.shape[1]}")
        if start.shape[0] > cfg.k:
            raise InsufficientData(f"{start.shape[0]} warm-start centroids exceed k={cfg.k}")

    full_batch = cfg.batch_size >= x.shape[0]
    best, best_inertia, rows = None, np.inf, []
    for restart, child in enumerate(np.random.SeedSequence(cfg.seed).spawn(cfg.n_init)):
        rng = np.random.default_rng(child)
        centroids = _kmeans_plus_plus(x, cfg.k, rng, start, n_jobs)
        if full_batch:
            centroids, run_rows = _lloyd(x, centroids, cfg, restart, n_jobs)
        else:
            centroids, run_rows = _mini_batch(x, centroids, cfg, restart, rng, n_jobs)
        rows.extend(run_rows)

        inertia = float(nearest_rows(x, centroids, n_jobs=n_jobs)[1].mean())
        logger.debug(f"restart {restart}: {len(run_rows)} iterations, inertia={inertia:.6g}")
        if inertia < best_inertia:
            best, best_inertia = centroids, inertia

    trace = pd.DataFrame(rows, columns=TRACE_COLUMNS)
    trace.attrs["inertia"] = best_inertia
    logger.info(
        f"k-means k={cfg.k} on {x.shape[0]} vectors ({'full' if full_batch else 'mini'}-batch, "
        f"{cfg.n_init} restart(s)): inertia={best_inertia:.6g}"
    )
    return Codebook.from_array(best), trace


def build_cluster_tokenizer(data: Sequence[FeatureMap], cfg: KMeansConfig, n_jobs: int = 1) -> Codebook:
    """The frozen codebook of a cluster tokenizer; tokenize with ``vq_quantize``."""
    book, _ = kmeans_fit(data, cfg, n_jobs=n_jobs)
    return book


def random_codebook(data: Sequence[FeatureMap], k: int, seed: int) -> Codebook:
    """k distinct feature vectors drawn uniformly (seeded) from the pooled data."""
    x = pool_vectors(data)
    if k > x.shape[0]:
        raise InsufficientData(f"cannot draw {k} anchors from {x.shape[0]} vectors")
    rng = np.random.default_rng(seed)
    picks = np.sort(rng.choice(x.shape[0], size=k, replace=False))
    return Codebook.from_array(x[picks])
