"""Codebook size x dimension sweep.

For each dimension the features are projected onto their top principal axes
(the full dimension uses them unchanged). Sizes are fitted in ascending order,
each k-means warm-started from the previous size's centroids, so the
quantization error can only go down as the codebook grows.
"""
import logging
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, field_validator

from vqtk.cluster.kmeans import KMeansConfig, kmeans_fit
from vqtk.config import settings
from vqtk.core.types import FeatureMap, pool_vectors
from vqtk.errors import UsageError
from vqtk.metrics.frechet import feature_stats, frechet_distance
from vqtk.metrics.perplexity import perplexity
from vqtk.metrics.projection import principal_axes
from vqtk.metrics.usage import codebook_usage
from vqtk.proposal.ngram import NgramConfig, ngram_fit
from vqtk.quant.vq import vq_quantize
from vqtk.schemas import SweepRow
from vqtk.utils.progress_tracker import ProgressTracker

logger = logging.getLogger(__name__)

DEFAULT_SIZES = [1 << p for p in range(4, 11)]


class SweepConfig(BaseModel):
    sizes: List[int] = Field(default_factory=lambda: list(DEFAULT_SIZES))
    dims: List[int] = Field(default_factory=list)  # empty: the data's own dimension
    seed: int = Field(default_factory=lambda: settings.SEED, ge=0)
    max_iters: int = Field(default=20, ge=1)
    n_init: int = Field(default=1, ge=1)
    order: int = Field(default_factory=lambda: settings.NGRAM_ORDER, ge=1)
    alpha: float = Field(default_factory=lambda: settings.NGRAM_ALPHA, gt=0.0)

    @field_validator("sizes", "dims")
    @classmethod
    def _positive_entries(cls, values: List[int]) -> List[int]:
        if any(v < 1 for v in values):
            raise UsageError(f"sweep grid entries must be positive, got {values}")
        return sorted(set(values))


def project_maps(maps: Sequence[FeatureMap], dim: int) -> List[FeatureMap]:
    """Maps re-expressed on the top ``dim`` principal axes of their pooled vectors."""
    full = maps[0].dim
    if dim > full:
        raise UsageError(f"cannot project {full}-dim features up to {dim} dimensions")
    if dim == full:
        return list(maps)
    mean, components, _ = principal_axes(pool_vectors(maps), dim)
    return [
        FeatureMap(height=m.height, width=m.width, dim=dim,
                   data=(m.vectors.astype(np.float64) - mean) @ components)
        for m in maps
    ]


def run_sweep(
    maps: Sequence[FeatureMap],
    cfg: SweepConfig,
    n_jobs: int = 1,
    progress_tracker: Optional[ProgressTracker] = None,
) -> pd.DataFrame:
    if not cfg.sizes:
        raise UsageError("sweep needs at least one codebook size")
    dims = cfg.dims or [maps[0].dim]
    rows = []
    total = len(dims) * len(cfg.sizes)

    for dim in dims:
        data = project_maps(maps, dim)
        pooled = sum(m.positions for m in data)
        real_stats = feature_stats(data)
        previous = None

        for size in cfg.sizes:
            if progress_tracker:
                progress_tracker.sweep_cell(size, dim, len(rows) + 1, total)
            kmeans = KMeansConfig(k=size, seed=cfg.seed, max_iters=cfg.max_iters,
                                  n_init=cfg.n_init, batch_size=pooled)
            book, trace = kmeans_fit(data, kmeans, init=previous, n_jobs=n_jobs)
            previous = book.vectors

            tokens = [vq_quantize(m, book, n_jobs=n_jobs).tokens for m in data]
            recon = [book.lookup(t) for t in tokens]
            model = ngram_fit(tokens, NgramConfig(order=cfg.order, vocab_size=size, alpha=cfg.alpha))
            row = SweepRow(
                size=size,
                dim=dim,
                usage=codebook_usage(tokens, size).usage_percent,
                quant_error=trace.attrs["inertia"],
                frechet_recon=frechet_distance(real_stats, feature_stats(recon)),
                ppl=perplexity(model, tokens),
            )
            rows.append(row.model_dump())
            logger.info(f"sweep size={size} dim={dim}: quant_error={row.quant_error:.6g} usage={row.usage:.1f}%")

    if progress_tracker:
        progress_tracker.complete_all()
    return pd.DataFrame(rows, columns=list(SweepRow.model_fields))
