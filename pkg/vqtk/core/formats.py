"""Bit-exact binary codecs for feature maps (FMAP), codebooks (CBOK) and token
grids (TOKG).

Layout, all little-endian::

    FMAP | version u32 = 1 | h u32 | w u32 | d u32 | h*w*d x f32
    CBOK | version u32 = 1 | N u32 | d u32 | N*d x f32
    TOKG | version u32 = 1 | h u32 | w u32 | h*w x u32

Payloads are row-major (row, column, channel). Every reader error carries the
byte offset where the file stops making sense.
"""
import logging
import struct
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from vqtk.core.types import Codebook, FeatureMap, TokenGrid
from vqtk.errors import (
    BadMagic,
    DimensionOverflow,
    FormatError,
    IoError,
    NonFiniteValue,
    TrailingBytes,
    Truncated,
    UnsupportedVersion,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FORMAT_VERSION = 1
MAX_ELEMENTS = 1 << 31  # refuse headers that would need more than 8 GiB of f32 payload

FMAP_MAGIC = b"FMAP"
CBOK_MAGIC = b"CBOK"
TOKG_MAGIC = b"TOKG"

_F32 = np.dtype("<f4")
_U32 = np.dtype("<u4")


def _read_bytes(path: PathLike) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as e:
        raise IoError(f"cannot read {path}: {e.strerror or e}") from e


def _write_bytes(path: PathLike, payload: bytes) -> None:
    try:
        with open(path, "wb") as fh:
            fh.write(payload)
    except OSError as e:
        raise IoError(f"cannot write {path}: {e.strerror or e}") from e
    logger.debug(f"Wrote {len(payload)} bytes to {path}")


def _parse_header(buf: bytes, magic: bytes, n_dims: int, path: str) -> Tuple[Tuple[int, ...], int]:
    """Validate magic + version and return (dims, payload offset)."""
    if len(buf) < 4:
        raise Truncated(f"file too short for magic {magic.decode()}", len(buf), path)
    if buf[:4] != magic:
        raise BadMagic(f"expected magic {magic!r}, found {buf[:4]!r}", 0, path)

    header_size = 8 + 4 * n_dims
    if len(buf) < header_size:
        raise Truncated(f"header needs {header_size} bytes, file has {len(buf)}", len(buf), path)

    version, *dims = struct.unpack_from(f"<{1 + n_dims}I", buf, 4)
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"unsupported version {version}", 4, path)
    for i, value in enumerate(dims):
        if value == 0:
            raise FormatError("dimensions must be positive", 8 + 4 * i, path)
    return tuple(dims), header_size


def _payload(buf: bytes, offset: int, count: int, dtype: np.dtype, path: str) -> np.ndarray:
    expected = count * dtype.itemsize
    available = len(buf) - offset
    if available < expected:
        raise Truncated(
            f"payload needs {count} values ({expected} bytes), file holds {available // dtype.itemsize}",
            offset + available - available % dtype.itemsize,
            path,
        )
    if available > expected:
        raise TrailingBytes(f"{available - expected} unexpected bytes after payload", offset + expected, path)
    return np.frombuffer(buf, dtype=dtype, count=count, offset=offset)


def _finite_payload(buf: bytes, offset: int, count: int, path: str) -> np.ndarray:
    values = _payload(buf, offset, count, _F32, path)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        first = int(bad[0])
        raise NonFiniteValue(f"value #{first} is {values[first]}", offset + 4 * first, path)
    return values.astype(np.float32)


def _checked_dims(dims: Tuple[int, ...], path: str) -> int:
    count = 1
    for value in dims:
        count *= value
    if count > MAX_ELEMENTS:
        raise DimensionOverflow(f"declared shape {dims} holds {count} elements, limit is {MAX_ELEMENTS}", 8, path)
    return count


# FEATURE MAPS
def read_feature_map(path: PathLike) -> FeatureMap:
    buf = _read_bytes(path)
    (h, w, d), offset = _parse_header(buf, FMAP_MAGIC, 3, str(path))
    data = _finite_payload(buf, offset, _checked_dims((h, w, d), str(path)), str(path))
    return FeatureMap(height=h, width=w, dim=d, data=data)


def encode_feature_map(fmap: FeatureMap) -> bytes:
    header = struct.pack("<4s4I", FMAP_MAGIC, FORMAT_VERSION, fmap.height, fmap.width, fmap.dim)
    return header + fmap.data.astype(_F32).tobytes()


def write_feature_map(fmap: FeatureMap, path: PathLike) -> None:
    """Write ``fmap`` as FMAP. float64 maps are rounded to float32 on disk."""
    _write_bytes(path, encode_feature_map(fmap))


# CODEBOOKS
def read_codebook(path: PathLike) -> Codebook:
    buf = _read_bytes(path)
    (n, d), offset = _parse_header(buf, CBOK_MAGIC, 2, str(path))
    vectors = _finite_payload(buf, offset, _checked_dims((n, d), str(path)), str(path))
    return Codebook(size=n, dim=d, vectors=vectors)


def encode_codebook(book: Codebook) -> bytes:
    header = struct.pack("<4s3I", CBOK_MAGIC, FORMAT_VERSION, book.size, book.dim)
    return header + book.vectors.astype(_F32).tobytes()


def write_codebook(book: Codebook, path: PathLike) -> None:
    _write_bytes(path, encode_codebook(book))


# TOKEN GRIDS
def read_token_grid(path: PathLike) -> TokenGrid:
    buf = _read_bytes(path)
    (h, w), offset = _parse_header(buf, TOKG_MAGIC, 2, str(path))
    codes = _payload(buf, offset, _checked_dims((h, w), str(path)), _U32, str(path))
    return TokenGrid(height=h, width=w, codes=codes.astype(np.int64))


def encode_token_grid(tokens: TokenGrid) -> bytes:
    header = struct.pack("<4s3I", TOKG_MAGIC, FORMAT_VERSION, tokens.height, tokens.width)
    return header + tokens.codes.astype(_U32).tobytes()


def write_token_grid(tokens: TokenGrid, path: PathLike) -> None:
    _write_bytes(path, encode_token_grid(tokens))
