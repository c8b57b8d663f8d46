"""Domain types shared by every module.

All array-carrying types are frozen pydantic models holding read-only numpy
arrays, so instances can be shared across threads. Equality is bitwise
(``-0.0 != 0.0``, dtypes must match), which is what the codec round-trips
promise.
"""
from typing import Any, Dict, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from vqtk.errors import (
    CodeOutOfRange,
    DimensionMismatch,
    EmptyData,
    InvalidCodebook,
    InvalidFeatureMap,
    InvalidTokenGrid,
    NotPositiveSemiDefinite,
    DataError,
)

FLOAT_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))
MAX_CODE = (1 << 32) - 1
SYMMETRY_ATOL = 1e-8


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True, order="C")
    arr.setflags(write=False)
    return arr


def _float_array(values: Any, error_cls) -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype not in FLOAT_DTYPES:
        if arr.dtype.kind not in "fiu":
            raise error_cls(f"expected real values, got dtype {arr.dtype}")
        arr = arr.astype(np.float64)
    return arr


def _positive(name: str, value: Any, error_cls) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise error_cls(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def bitwise_equal(a: np.ndarray, b: np.ndarray) -> bool:
    return a.shape == b.shape and a.dtype == b.dtype and a.tobytes() == b.tobytes()


class _ArrayModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    def __eq__(self, other: object) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        for name in type(self).model_fields:
            left, right = getattr(self, name), getattr(other, name)
            if isinstance(left, np.ndarray):
                if not bitwise_equal(left, right):
                    return False
            elif left != right:
                return False
        return True

    __hash__ = None  # type: ignore[assignment]


class FeatureMap(_ArrayModel):
    """An h x w grid of d-dimensional real vectors, stored as a (h, w, d) array."""

    height: int
    width: int
    dim: int
    data: np.ndarray

    @model_validator(mode="before")
    @classmethod
    def _coerce(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        h = _positive("height", values.get("height"), InvalidFeatureMap)
        w = _positive("width", values.get("width"), InvalidFeatureMap)
        d = _positive("dim", values.get("dim"), InvalidFeatureMap)
        arr = _float_array(values.get("data"), InvalidFeatureMap)
        if arr.size != h * w * d:
            raise InvalidFeatureMap(
                f"data holds {arr.size} values, expected h*w*d = {h}*{w}*{d} = {h * w * d}"
            )
        if not np.isfinite(arr).all():
            raise InvalidFeatureMap("feature map contains non-finite values")
        return {"height": h, "width": w, "dim": d, "data": _readonly(arr.reshape(h, w, d))}

    @classmethod
    def from_array(cls, data: Any) -> "FeatureMap":
        arr = np.asarray(data)
        if arr.ndim != 3:
            raise InvalidFeatureMap(f"expected a (h, w, d) array, got shape {arr.shape}")
        h, w, d = arr.shape
        return cls(height=h, width=w, dim=d, data=arr)

    @property
    def positions(self) -> int:
        return self.height * self.width

    @property
    def vectors(self) -> np.ndarray:
        """(h*w, d) row-major view of the map."""
        return self.data.reshape(-1, self.dim)

    def with_data(self, data: np.ndarray) -> "FeatureMap":
        return FeatureMap(height=self.height, width=self.width, dim=self.dim, data=data)


def pool_vectors(data: Sequence[FeatureMap], dim: int = 0) -> np.ndarray:
    """Stack every position of every map into one (n, d) float64 array."""
    if not data:
        raise EmptyData("no feature maps supplied")
    dim = dim or data[0].dim
    for i, fmap in enumerate(data):
        if fmap.dim != dim:
            raise DimensionMismatch(f"feature map #{i} has dim {fmap.dim}, expected {dim}")
    return np.concatenate([fmap.vectors for fmap in data]).astype(np.float64)


class Codebook(_ArrayModel):
    """N code vectors of dimension d, stored as an (N, d) array."""

    size: int
    dim: int
    vectors: np.ndarray

    @model_validator(mode="before")
    @classmethod
    def _coerce(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        n = _positive("size", values.get("size"), InvalidCodebook)
        d = _positive("dim", values.get("dim"), InvalidCodebook)
        arr = _float_array(values.get("vectors"), InvalidCodebook)
        if arr.size != n * d:
            raise InvalidCodebook(f"vectors hold {arr.size} values, expected N*d = {n}*{d}")
        if not np.isfinite(arr).all():
            raise InvalidCodebook("codebook contains non-finite values")
        return {"size": n, "dim": d, "vectors": _readonly(arr.reshape(n, d))}

    @classmethod
    def from_array(cls, vectors: Any) -> "Codebook":
        arr = np.asarray(vectors)
        if arr.ndim != 2:
            raise InvalidCodebook(f"expected an (N, d) array, got shape {arr.shape}")
        return cls(size=arr.shape[0], dim=arr.shape[1], vectors=arr)

    def lookup(self, tokens: "TokenGrid") -> FeatureMap:
        """C(z): the grid of code vectors selected by ``tokens``."""
        tokens.validate_against(self.size)
        return FeatureMap(
            height=tokens.height, width=tokens.width, dim=self.dim,
            data=self.vectors[tokens.codes.reshape(-1)],
        )


class TokenGrid(_ArrayModel):
    """An h x w grid of zero-based integer codes, stored as an (h, w) int64 array."""

    height: int
    width: int
    codes: np.ndarray

    @model_validator(mode="before")
    @classmethod
    def _coerce(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        h = _positive("height", values.get("height"), InvalidTokenGrid)
        w = _positive("width", values.get("width"), InvalidTokenGrid)
        arr = np.asarray(values.get("codes"))
        if arr.size and arr.dtype.kind not in "iu":
            if arr.dtype.kind == "f" and np.all(np.mod(arr, 1) == 0):
                arr = arr.astype(np.int64)
            else:
                raise InvalidTokenGrid(f"codes must be integers, got dtype {arr.dtype}")
        if arr.size != h * w:
            raise InvalidTokenGrid(f"codes hold {arr.size} values, expected h*w = {h}*{w}")
        arr = arr.astype(np.int64).reshape(h, w)
        if arr.size and (arr.min() < 0 or arr.max() > MAX_CODE):
            raise InvalidTokenGrid("codes must lie in [0, 2^32)")
        return {"height": h, "width": w, "codes": _readonly(arr)}

    @classmethod
    def from_array(cls, codes: Any) -> "TokenGrid":
        arr = np.asarray(codes)
        if arr.ndim != 2:
            raise InvalidTokenGrid(f"expected an (h, w) array, got shape {arr.shape}")
        return cls(height=arr.shape[0], width=arr.shape[1], codes=arr)

    @property
    def length(self) -> int:
        return self.height * self.width

    def sequence(self) -> np.ndarray:
        """Raster (row-major) serialization of the grid."""
        return self.codes.reshape(-1)

    def validate_against(self, vocab_size: int) -> "TokenGrid":
        top = int(self.codes.max())
        if top >= vocab_size:
            position = np.unravel_index(int(np.argmax(self.codes)), self.codes.shape)
            raise CodeOutOfRange(
                f"code {top} at (row {position[0]}, col {position[1]}) is outside [0, {vocab_size})"
            )
        return self


class GaussianStats(_ArrayModel):
    """Mean, covariance and sample count of a feature population."""

    dim: int
    mean: np.ndarray
    covariance: np.ndarray
    count: int

    @model_validator(mode="before")
    @classmethod
    def _coerce(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        d = _positive("dim", values.get("dim"), DataError)
        count = values.get("count")
        if not isinstance(count, (int, np.integer)) or count < 2:
            raise DataError(f"Gaussian statistics need at least 2 samples, got {count!r}")
        mean = np.asarray(values.get("mean"), dtype=np.float64).reshape(-1)
        cov = np.asarray(values.get("covariance"), dtype=np.float64)
        if mean.shape != (d,) or cov.shape != (d, d):
            raise DataError(f"expected mean ({d},) and covariance ({d}, {d}), got {mean.shape} and {cov.shape}")
        if not (np.isfinite(mean).all() and np.isfinite(cov).all()):
            raise DataError("Gaussian statistics contain non-finite values")
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_ATOL:
            raise NotPositiveSemiDefinite("covariance is not symmetric within 1e-8")
        if np.any(np.diag(cov) < 0):
            raise NotPositiveSemiDefinite("covariance has a negative diagonal entry")
        return {"dim": d, "mean": _readonly(mean), "covariance": _readonly(cov), "count": int(count)}


class QuantizeOutput(_ArrayModel):
    tokens: TokenGrid
    code_vectors: FeatureMap
    quant_error: float
    distances: Optional[np.ndarray] = None  # per-position squared distance, (h, w)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QuantizeOutput):
            return NotImplemented
        return (
            self.tokens == other.tokens
            and self.code_vectors == other.code_vectors
            and self.quant_error == other.quant_error
        )
