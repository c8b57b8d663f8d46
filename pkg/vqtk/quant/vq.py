"""Nearest-neighbour vector quantization, the two-term quantization loss and
its gradients under stop-gradient semantics, and the straight-through rule.

Shapes follow the domain types: a map holds L = h*w positions of dimension d,
the codebook holds N rows of dimension d. Reductions are a squared Euclidean
norm per position followed by a mean over the L positions.
"""
import logging
from typing import NamedTuple, Tuple

import numpy as np
from pydantic import BaseModel, Field

from vqtk.config import settings
from vqtk.core.types import Codebook, FeatureMap, QuantizeOutput, TokenGrid
from vqtk.errors import DimensionMismatch, ShapeMismatch
from vqtk.utils.parallel import nearest_rows

logger = logging.getLogger(__name__)


class VqLossConfig(BaseModel):
    beta: float = Field(default_factory=lambda: settings.VQ_BETA, ge=0.0, allow_inf_nan=False)


class VqLossTerms(NamedTuple):
    total: float
    codebook_term: float
    commitment_term: float


class VqGradients(NamedTuple):
    grad_x: np.ndarray  # (h, w, d)
    grad_book: np.ndarray  # (N, d)


def _check_dims(fmap: FeatureMap, book: Codebook) -> None:
    if fmap.dim != book.dim:
        raise DimensionMismatch(f"feature dim {fmap.dim} does not match codebook dim {book.dim}")


def _check_tokens(fmap: FeatureMap, book: Codebook, tokens: TokenGrid) -> None:
    _check_dims(fmap, book)
    if (tokens.height, tokens.width) != (fmap.height, fmap.width):
        raise ShapeMismatch(
            f"token grid {tokens.height}x{tokens.width} does not match map {fmap.height}x{fmap.width}"
        )
    tokens.validate_against(book.size)


def vq_quantize(fmap: FeatureMap, book: Codebook, n_jobs: int = 1) -> QuantizeOutput:
    """Assign every position to its closest code (lowest index on ties)."""
    _check_dims(fmap, book)
    codes, dist = nearest_rows(fmap.vectors, book.vectors, n_jobs=n_jobs)
    tokens = TokenGrid(height=fmap.height, width=fmap.width, codes=codes)
    code_vectors = FeatureMap(
        height=fmap.height, width=fmap.width, dim=book.dim, data=book.vectors[codes]
    )
    return QuantizeOutput(
        tokens=tokens,
        code_vectors=code_vectors,
        quant_error=float(dist.mean()),
        distances=dist.reshape(fmap.height, fmap.width),
    )


def _residual(fmap: FeatureMap, book: Codebook, tokens: TokenGrid) -> np.ndarray:
    """x - C(z) per position, float64, shape (L, d)."""
    x = fmap.vectors.astype(np.float64)
    selected = book.vectors[tokens.sequence()].astype(np.float64)
    return x - selected


def vq_loss(fmap: FeatureMap, book: Codebook, tokens: TokenGrid, cfg: VqLossConfig) -> VqLossTerms:
    """codebook_term = mean ||sg[x] - C(z)||^2, commitment_term = mean ||x - sg[C(z)]||^2.

    sg[] only changes gradient flow, so both terms have the same value and
    total = (1 + beta) * mean ||x - C(z)||^2.
    """
    _check_tokens(fmap, book, tokens)
    residual = _residual(fmap, book, tokens)
    mse = float(np.square(residual).sum(axis=1).mean())
    return VqLossTerms(total=mse + cfg.beta * mse, codebook_term=mse, commitment_term=mse)


def vq_loss_gradients(fmap: FeatureMap, book: Codebook, tokens: TokenGrid, cfg: VqLossConfig) -> VqGradients:
    """Gradients of the quantization loss with ``tokens`` held fixed.

    x only sees the commitment term: 2*beta*(x - C(z))/L. A codebook row only
    sees the codebook term: -(2/L) * sum over its positions of (x - c). Rows no
    position selects get exactly zero.
    """
    _check_tokens(fmap, book, tokens)
    residual = _residual(fmap, book, tokens)
    length = residual.shape[0]

    grad_x = (2.0 * cfg.beta / length) * residual

    grad_book = np.zeros((book.size, book.dim), dtype=np.float64)
    np.add.at(grad_book, tokens.sequence(), residual)
    grad_book *= -2.0 / length

    return VqGradients(grad_x=grad_x.reshape(fmap.data.shape), grad_book=grad_book)


def ste_backward(upstream: np.ndarray, output: QuantizeOutput, book: Codebook) -> VqGradients:
    """Straight-through estimator.

    The gradient arriving at the quantizer output is copied to the input
    unchanged; nothing flows into the codebook along this path.
    """
    upstream = np.asarray(upstream)
    expected: Tuple[int, ...] = output.code_vectors.data.shape
    if upstream.shape != expected:
        raise ShapeMismatch(f"upstream gradient shape {upstream.shape} does not match output {expected}")
    return VqGradients(
        grad_x=upstream.copy(),
        grad_book=np.zeros((book.size, book.dim), dtype=upstream.dtype),
    )


def straight_through(fmap: FeatureMap, output: QuantizeOutput) -> np.ndarray:
    """Forward value of x + sg[C(z) - x]: numerically C(z) as float64."""
    if output.code_vectors.data.shape != fmap.data.shape:
        raise ShapeMismatch("quantizer output does not match the input map")
    return output.code_vectors.data.astype(np.float64)


def compose_total_loss(quant_total: float, reconstruction_loss: float) -> float:
    """Tokenizer objective: quantization loss plus an externally computed reconstruction term."""
    return float(quant_total) + float(reconstruction_loss)
