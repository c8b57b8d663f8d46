from typing import Sequence

import numpy as np

from vqtk.core.types import TokenGrid
from vqtk.errors import EmptyData
from vqtk.schemas import UsageReport


def code_histogram(corpus: Sequence[TokenGrid], vocab_size: int) -> np.ndarray:
    """Occurrences of every code in [0, vocab_size) across the corpus."""
    if not corpus:
        raise EmptyData("usage needs at least one token grid")
    hist = np.zeros(vocab_size, dtype=np.int64)
    for grid in corpus:
        grid.validate_against(vocab_size)
        hist += np.bincount(grid.sequence(), minlength=vocab_size)
    return hist


def codebook_usage(corpus: Sequence[TokenGrid], vocab_size: int) -> UsageReport:
    hist = code_histogram(corpus, vocab_size)
    used = int(np.count_nonzero(hist))
    p = hist[hist > 0] / hist.sum()
    return UsageReport(
        used=used,
        total=vocab_size,
        usage_percent=100.0 * used / vocab_size,
        code_perplexity=float(np.exp(-(p * np.log(p)).sum())),
    )
