"""Finite scalar quantization.

Each channel k is bounded with tanh and rounded onto L_k evenly spaced values
in [-1, 1]. Writing v = L_k/2 - 0.5 for the half width, the grid points are
q/v for q in {-v, ..., v}: integers for odd L_k, half integers for even L_k.
Digits are q + v in [0, L_k) and pack into one flat code with channel 0 as
the least significant position.
"""
import logging
from functools import reduce
from typing import Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from vqtk.core.types import Codebook, FeatureMap, QuantizeOutput, TokenGrid
from vqtk.errors import CodeOutOfRange, DimensionMismatch, InvalidFeatureMap, UsageError

logger = logging.getLogger(__name__)

MAX_CODES = 1 << 32
MAX_IMPLIED_ROWS = 1 << 24


def round_half_away(values: np.ndarray) -> np.ndarray:
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


class FsqLevels(BaseModel):
    model_config = ConfigDict(frozen=True)

    levels: Tuple[int, ...]

    @field_validator("levels", mode="before")
    @classmethod
    def _check_levels(cls, value):
        levels = tuple(value)
        if not levels:
            raise UsageError("FSQ needs at least one level")
        for level in levels:
            if isinstance(level, bool) or not isinstance(level, (int, np.integer)) or level < 2:
                raise UsageError(f"every FSQ level must be an integer >= 2, got {level!r}")
        size = reduce(lambda a, b: a * int(b), levels, 1)
        if size > MAX_CODES:
            raise UsageError(f"product of levels {size} exceeds 2^32")
        return tuple(int(level) for level in levels)

    @property
    def dim(self) -> int:
        return len(self.levels)

    @property
    def size(self) -> int:
        return reduce(lambda a, b: a * b, self.levels, 1)

    @property
    def radices(self) -> np.ndarray:
        """Place value of each channel's digit."""
        return np.cumprod((1,) + self.levels[:-1], dtype=np.int64)

    def __str__(self) -> str:
        return ",".join(str(level) for level in self.levels)


def parse_levels(text: Union[str, Sequence[int]]) -> FsqLevels:
    """``"8,8,5,5,5"`` -> FsqLevels((8, 8, 5, 5, 5))."""
    if not isinstance(text, str):
        return FsqLevels(levels=tuple(text))
    try:
        levels = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise UsageError(f"cannot parse FSQ levels {text!r}; expected e.g. 8,8,5,5,5")
    return FsqLevels(levels=levels)


def _half_widths(levels: FsqLevels) -> Tuple[np.ndarray, np.ndarray]:
    """(v, offset) per channel; offset is 0.5 on even channels."""
    counts = np.asarray(levels.levels, dtype=np.float64)
    return counts / 2.0 - 0.5, np.where(counts % 2 == 0, 0.5, 0.0)


def _digits_to_values(digits: np.ndarray, levels: FsqLevels) -> np.ndarray:
    half, _ = _half_widths(levels)
    return ((digits.astype(np.float64) - half) / half).astype(np.float32)


def fsq_quantize(fmap: FeatureMap, levels: FsqLevels, prebounded: bool = False) -> QuantizeOutput:
    """Quantize every channel onto its level grid.

    With ``prebounded`` the tanh bound is skipped and inputs must already lie in
    [-1, 1]. Code vectors produced here satisfy that, and re-quantizing them on
    this path reproduces the same tokens and vectors.
    """
    if fmap.dim != levels.dim:
        raise DimensionMismatch(f"feature dim {fmap.dim} does not match {levels.dim} FSQ levels")

    x = fmap.vectors.astype(np.float64)
    if prebounded:
        if np.any(np.abs(x) > 1.0):
            raise InvalidFeatureMap("prebounded FSQ input has values outside [-1, 1]")
        bounded = x
    else:
        bounded = np.tanh(x)

    half, offset = _half_widths(levels)
    digits = (round_half_away(half * bounded + offset) - offset + half).astype(np.int64)

    codes = fsq_pack(digits, levels)
    values = _digits_to_values(digits, levels)
    residual = x - values.astype(np.float64)
    dist = np.square(residual).sum(axis=1)

    return QuantizeOutput(
        tokens=TokenGrid(height=fmap.height, width=fmap.width, codes=codes),
        code_vectors=fmap.with_data(values),
        quant_error=float(dist.mean()),
        distances=dist.reshape(fmap.height, fmap.width),
    )


def fsq_pack(digits, levels: FsqLevels) -> np.ndarray:
    """Mixed-radix sum of per-channel digits; the last axis indexes channels."""
    digits = np.asarray(digits, dtype=np.int64)
    if digits.shape[-1:] != (levels.dim,):
        raise DimensionMismatch(f"expected {levels.dim} digits per code, got shape {digits.shape}")
    bounds = np.asarray(levels.levels, dtype=np.int64)
    bad = (digits < 0) | (digits >= bounds)
    if bad.any():
        where = np.argwhere(bad)[0]
        raise CodeOutOfRange(
            f"digit {digits[tuple(where)]} on channel {where[-1]} is outside [0, {bounds[where[-1]]})"
        )
    return (digits * levels.radices).sum(axis=-1)


def fsq_unpack(codes, levels: FsqLevels) -> np.ndarray:
    """Inverse of :func:`fsq_pack`; appends a channel axis."""
    codes = np.asarray(codes, dtype=np.int64)
    if codes.size and (codes.min() < 0 or codes.max() >= levels.size):
        raise CodeOutOfRange(f"flat code outside [0, {levels.size})")
    bounds = np.asarray(levels.levels, dtype=np.int64)
    return (codes[..., None] // levels.radices) % bounds


def fsq_implied_codebook(levels: FsqLevels) -> Codebook:
    """Row c is the grid vector whose digits are ``fsq_unpack(c)``."""
    if levels.size > MAX_IMPLIED_ROWS:
        raise UsageError(f"implied codebook of {levels.size} rows is too large to materialize")
    digits = fsq_unpack(np.arange(levels.size), levels)
    return Codebook.from_array(_digits_to_values(digits, levels))


def fsq_detokenize(tokens: TokenGrid, levels: FsqLevels) -> FeatureMap:
    """Grid vectors for ``tokens`` without materializing the implied codebook."""
    digits = fsq_unpack(tokens.sequence(), levels)
    return FeatureMap(
        height=tokens.height, width=tokens.width, dim=levels.dim,
        data=_digits_to_values(digits, levels),
    )


def fsq_tokens_from_vectors(fmap: FeatureMap, levels: FsqLevels) -> TokenGrid:
    """Snap grid vectors (e.g. detokenized maps) back to flat codes."""
    return fsq_quantize(fmap, levels, prebounded=True).tokens
