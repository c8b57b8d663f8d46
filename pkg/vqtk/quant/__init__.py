from vqtk.quant.fsq import (
    FsqLevels,
    fsq_detokenize,
    fsq_implied_codebook,
    fsq_pack,
    fsq_quantize,
    fsq_tokens_from_vectors,
    fsq_unpack,
    parse_levels,
)
from vqtk.quant.trainer import VqTrainConfig, train_codebook
from vqtk.quant.vq import (
    VqLossConfig,
    compose_total_loss,
    ste_backward,
    straight_through,
    vq_loss,
    vq_loss_gradients,
    vq_quantize,
)

__all__ = [
    "FsqLevels",
    "VqLossConfig",
    "VqTrainConfig",
    "compose_total_loss",
    "fsq_detokenize",
    "fsq_implied_codebook",
    "fsq_pack",
    "fsq_quantize",
    "fsq_tokens_from_vectors",
    "fsq_unpack",
    "parse_levels",
    "ste_backward",
    "straight_through",
    "train_codebook",
    "vq_loss",
    "vq_loss_gradients",
    "vq_quantize",
]
