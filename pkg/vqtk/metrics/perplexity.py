import logging
import math
from typing import Sequence

from vqtk.core.types import TokenGrid
from vqtk.errors import EmptyData
from vqtk.proposal.base import ProposalModel, check_codes
from vqtk.schemas import PerplexityReport

logger = logging.getLogger(__name__)


def perplexity_report(model: ProposalModel, corpus: Sequence[TokenGrid]) -> PerplexityReport:
    """exp(-(1/L) * sum ln p) pooled over every grid; each grid starts a new sequence.

    Models with a corpus-independent perplexity (uniform) report it in closed
    form after the codes have been range-checked.
    """
    if not corpus:
        raise EmptyData("perplexity needs at least one token grid")
    tokens = sum(grid.length for grid in corpus)

    closed = model.closed_form_perplexity()
    if closed is not None:
        for grid in corpus:
            check_codes(grid.sequence(), model.vocab_size)
        return PerplexityReport(perplexity=closed, tokens=tokens, grids=len(corpus))

    log_prob = 0.0
    for grid in corpus:
        log_prob += model.sequence_log_prob(grid.sequence())
    ppl = math.exp(-log_prob / tokens)
    logger.debug(f"perplexity over {len(corpus)} grids / {tokens} tokens: {ppl:.6g}")
    return PerplexityReport(perplexity=ppl, tokens=tokens, grids=len(corpus), log_prob=log_prob)


def perplexity(model: ProposalModel, corpus: Sequence[TokenGrid]) -> float:
    return perplexity_report(model, corpus).perplexity
