from vqtk.data.loaders import discover, load_feature_maps, load_token_grids, write_feature_dir, write_token_dir
from vqtk.data.synthetic import GaussianMixtureWorld, WorldConfig

__all__ = [
    "GaussianMixtureWorld",
    "WorldConfig",
    "discover",
    "load_feature_maps",
    "load_token_grids",
    "write_feature_dir",
    "write_token_dir",
]
