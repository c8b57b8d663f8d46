"""Input discovery for the batch commands.

An input is either a single file or a directory; directories are scanned
(non-recursively) for files with the format's suffix, in sorted name order.
"""
import logging
from pathlib import Path
from typing import List, Sequence, Tuple

from vqtk.core.formats import PathLike, read_feature_map, read_token_grid, write_feature_map, write_token_grid
from vqtk.core.types import FeatureMap, TokenGrid
from vqtk.errors import EmptyData, IoError

logger = logging.getLogger(__name__)

FMAP_SUFFIX = ".fmap"
TOKG_SUFFIX = ".tokg"


def discover(path: PathLike, suffix: str) -> List[Path]:
    root = Path(path)
    if not root.exists():
        raise IoError(f"input path does not exist: {root}")
    if root.is_file():
        return [root]
    found = sorted(p for p in root.iterdir() if p.is_file() and p.suffix == suffix)
    if not found:
        raise EmptyData(f"no {suffix} files in {root}")
    logger.debug(f"Found {len(found)} {suffix} files in {root}")
    return found


def load_feature_maps(path: PathLike) -> Tuple[List[Path], List[FeatureMap]]:
    files = discover(path, FMAP_SUFFIX)
    return files, [read_feature_map(f) for f in files]


def load_token_grids(path: PathLike) -> Tuple[List[Path], List[TokenGrid]]:
    files = discover(path, TOKG_SUFFIX)
    return files, [read_token_grid(f) for f in files]


def ensure_dir(path: PathLike) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IoError(f"cannot create output directory {out}: {e.strerror or e}") from e
    return out


def write_token_dir(outdir: PathLike, names: Sequence[str], grids: Sequence[TokenGrid]) -> List[Path]:
    out = ensure_dir(outdir)
    paths = [out / f"{name}{TOKG_SUFFIX}" for name in names]
    for p, grid in zip(paths, grids):
        write_token_grid(grid, p)
    return paths


def write_feature_dir(outdir: PathLike, names: Sequence[str], maps: Sequence[FeatureMap]) -> List[Path]:
    out = ensure_dir(outdir)
    paths = [out / f"{name}{FMAP_SUFFIX}" for name in names]
    for p, fmap in zip(paths, maps):
        write_feature_map(fmap, p)
    return paths
