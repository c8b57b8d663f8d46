# centralised import point for the domain types and their codecs.

from vqtk.core.types import Codebook, FeatureMap, GaussianStats, QuantizeOutput, TokenGrid, pool_vectors
from vqtk.core.formats import (
    read_codebook,
    read_feature_map,
    read_token_grid,
    write_codebook,
    write_feature_map,
    write_token_grid,
)

__all__ = [
    "Codebook",
    "FeatureMap",
    "GaussianStats",
    "QuantizeOutput",
    "TokenGrid",
    "pool_vectors",
    "read_codebook",
    "read_feature_map",
    "read_token_grid",
    "write_codebook",
    "write_feature_map",
    "write_token_grid",
]
