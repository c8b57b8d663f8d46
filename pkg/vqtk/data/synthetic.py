"""Synthetic token world: feature maps drawn from a Gaussian mixture with
sequential structure.

The world has ``components`` semantic components, each owning
``modes_per_component`` tight sub-modes. A map belongs to one component. Along
raster order it walks that component's sub-modes: with ``stay_prob`` it moves
to the next sub-mode in the cycle, otherwise it jumps to a uniformly drawn one.
Every position emits its sub-mode centre plus isotropic noise.
"""
import logging
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, Field

from vqtk.core.types import FeatureMap

logger = logging.getLogger(__name__)


class WorldConfig(BaseModel):
    components: int = Field(default=4, ge=1)
    modes_per_component: int = Field(default=4, ge=1)
    dim: int = Field(default=8, ge=1)
    height: int = Field(default=8, ge=1)
    width: int = Field(default=8, ge=1)
    center_scale: float = Field(default=4.0, gt=0.0)
    mode_scale: float = Field(default=4.0, ge=0.0)
    noise: float = Field(default=0.2, ge=0.0)
    stay_prob: float = Field(default=0.85, ge=0.0, le=1.0)


class GaussianMixtureWorld:
    def __init__(self, cfg: WorldConfig = WorldConfig(), seed: int = 0):
        self.cfg = cfg
        rng = np.random.default_rng(seed)
        centers = rng.normal(0.0, cfg.center_scale, size=(cfg.components, cfg.dim))
        offsets = rng.normal(0.0, cfg.mode_scale, size=(cfg.components, cfg.modes_per_component, cfg.dim))
        self.modes = centers[:, None, :] + offsets  # (components, modes, dim)

    @property
    def n_modes(self) -> int:
        return self.cfg.components * self.cfg.modes_per_component

    def _walk(self, rng: np.random.Generator) -> np.ndarray:
        cfg = self.cfg
        length = cfg.height * cfg.width
        m = cfg.modes_per_component
        stays = rng.random(length) < cfg.stay_prob
        jumps = rng.integers(0, m, size=length)
        path = np.empty(length, dtype=np.int64)
        path[0] = jumps[0]
        for i in range(1, length):
            path[i] = (path[i - 1] + 1) % m if stays[i] else jumps[i]
        return path

    def sample_with_modes(self, n_maps: int, seed: int) -> Tuple[List[FeatureMap], List[np.ndarray]]:
        """``n_maps`` feature maps and, for each, its (h, w) grid of global mode ids."""
        cfg = self.cfg
        rng = np.random.default_rng(seed)
        maps, labels = [], []
        for _ in range(n_maps):
            component = int(rng.integers(cfg.components))
            path = self._walk(rng)
            noise = rng.normal(0.0, cfg.noise, size=(path.size, cfg.dim))
            data = self.modes[component, path] + noise
            maps.append(FeatureMap(height=cfg.height, width=cfg.width, dim=cfg.dim,
                                   data=data.astype(np.float32)))
            labels.append((component * cfg.modes_per_component + path).reshape(cfg.height, cfg.width))
        logger.debug(f"Sampled {n_maps} maps from a {self.n_modes}-mode world")
        return maps, labels

    def sample(self, n_maps: int, seed: int) -> List[FeatureMap]:
        return self.sample_with_modes(n_maps, seed)[0]
