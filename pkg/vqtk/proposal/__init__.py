from vqtk.proposal.base import BOS, DeterministicModel, ProposalModel, UniformModel
from vqtk.proposal.ngram import (
    NgramConfig,
    NgramModel,
    load_ngram,
    ngram_fit,
    ngram_sample,
    sample_grids,
    save_ngram,
    sequence_log_prob,
)

__all__ = [
    "BOS",
    "DeterministicModel",
    "NgramConfig",
    "NgramModel",
    "ProposalModel",
    "UniformModel",
    "load_ngram",
    "ngram_fit",
    "ngram_sample",
    "sample_grids",
    "save_ngram",
    "sequence_log_prob",
]
