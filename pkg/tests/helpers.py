import numpy as np

from vqtk.core.types import Codebook, FeatureMap


def random_map(rng, h=4, w=5, d=3, dtype=np.float64) -> FeatureMap:
    return FeatureMap.from_array(rng.normal(size=(h, w, d)).astype(dtype))


def random_book(rng, n=6, d=3, dtype=np.float64) -> Codebook:
    return Codebook.from_array(rng.normal(size=(n, d)).astype(dtype))
