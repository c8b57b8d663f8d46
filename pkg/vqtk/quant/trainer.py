import logging
from typing import Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from vqtk.config import settings
from vqtk.core.types import Codebook, FeatureMap, pool_vectors
from vqtk.utils.parallel import nearest_rows

logger = logging.getLogger(__name__)


class VqTrainConfig(BaseModel):
    ema_decay: float = Field(default_factory=lambda: settings.EMA_DECAY, gt=0.0, lt=1.0)
    dead_code_threshold: int = Field(default_factory=lambda: settings.DEAD_CODE_THRESHOLD, ge=0)
    reinit_seed: int = Field(default_factory=lambda: settings.SEED, ge=0)
    epochs: int = Field(default_factory=lambda: settings.TRAIN_EPOCHS, ge=1)
    batch_size: int = Field(default_factory=lambda: settings.TRAIN_BATCH_SIZE, ge=1)


def train_codebook(
    data: Sequence[FeatureMap],
    init: Codebook,
    cfg: VqTrainConfig,
    n_jobs: int = 1,
) -> Tuple[Codebook, pd.DataFrame]:
    """Batch codebook training with EMA updates and dead-code reinitialization.

    Per batch every used code moves toward the mean of its assigned vectors,
    c <- c + (1 - decay) * (mean - c). At the end of an epoch, codes used at most
    ``dead_code_threshold`` times are replaced by distinct vectors drawn from
    the last batch. The trace holds one row per epoch: the mean squared
    quantization error measured at assignment time, the number of codes used,
    and the number reinitialized.
    """
    x = pool_vectors(data, init.dim)
    n = x.shape[0]
    book = init.vectors.astype(np.float64)
    rng = np.random.default_rng(cfg.reinit_seed)
    step = 1.0 - cfg.ema_decay

    rows = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n) if n > cfg.batch_size else np.arange(n)
        uses = np.zeros(init.size, dtype=np.int64)
        error_sum = 0.0
        batch = x[:0]

        for start in range(0, n, cfg.batch_size):
            batch = x[order[start:start + cfg.batch_size]]
            codes, dist = nearest_rows(batch, book, n_jobs=n_jobs)
            error_sum += float(dist.sum())

            counts = np.bincount(codes, minlength=init.size)
            sums = np.zeros_like(book)
            np.add.at(sums, codes, batch)
            used = counts > 0
            means = sums[used] / counts[used, None]
            book[used] += step * (means - book[used])
            uses += counts

        dead = np.flatnonzero(uses <= cfg.dead_code_threshold)
        replaced = min(dead.size, batch.shape[0])
        if replaced:
            anchors = rng.choice(batch.shape[0], size=replaced, replace=False)
            book[dead[:replaced]] = batch[anchors]

        rows.append({
            "epoch": epoch,
            "quant_error": error_sum / n,
            "used_codes": int(np.count_nonzero(uses)),
            "reinitialized": int(replaced),
        })
        logger.debug(
            f"epoch {epoch}: quant_error={error_sum / n:.6g} used={np.count_nonzero(uses)}/{init.size} "
            f"reinitialized={replaced}"
        )

    trace = pd.DataFrame(rows, columns=["epoch", "quant_error", "used_codes", "reinitialized"])
    logger.info(
        f"Trained codebook N={init.size} d={init.dim} over {cfg.epochs} epochs, "
        f"final quant_error={trace['quant_error'].iloc[-1]:.6g}"
    )
    trained = Codebook(size=init.size, dim=init.dim, vectors=book.astype(init.vectors.dtype))
    return trained, trace
