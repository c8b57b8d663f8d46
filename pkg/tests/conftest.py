import numpy as np
import pytest

from vqtk.data.loaders import write_feature_dir
from vqtk.data.synthetic import GaussianMixtureWorld, WorldConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def world():
    return GaussianMixtureWorld(WorldConfig(), seed=3)


@pytest.fixture
def world_maps(world):
    return world.sample(16, seed=4)


@pytest.fixture
def feature_dir(tmp_path, world_maps):
    """Sixteen FMAP files from the default synthetic world."""
    out = tmp_path / "feats"
    write_feature_dir(out, [f"map_{i:02d}" for i in range(len(world_maps))], world_maps)
    return out
