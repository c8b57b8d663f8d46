import argparse
import logging
from pathlib import Path

import numpy as np

from vqtk.cli.commands.common import add_quantizer_source, levels_of, quantizer_source, stems
from vqtk.cli.reports import CommandResult, manifest_for_dir
from vqtk.config import settings
from vqtk.data.loaders import load_feature_maps, load_token_grids, write_feature_dir, write_token_dir
from vqtk.errors import UsageError
from vqtk.metrics.usage import codebook_usage
from vqtk.quant.fsq import fsq_detokenize, fsq_quantize
from vqtk.quant.vq import vq_quantize

logger = logging.getLogger(__name__)


def register(subparsers, parents) -> None:
    tok = subparsers.add_parser("tokenize", parents=parents, help="quantize feature maps into token grids")
    tok.add_argument("--quantizer", choices=["vq", "fsq"])
    add_quantizer_source(tok)
    tok.add_argument("-i", "--input", type=Path, required=True, help="FMAP file or directory")
    tok.add_argument("-o", "--output", type=Path, required=True, help="directory for TOKG files")
    tok.add_argument("--prebounded", action="store_true", help="FSQ: inputs already lie on [-1, 1]; skip tanh")
    tok.set_defaults(handler=run_tokenize)

    detok = subparsers.add_parser("detokenize", parents=parents,
                                  help="map token grids back to code-vector feature maps")
    add_quantizer_source(detok)
    detok.add_argument("-t", "--tokens", type=Path, required=True, help="TOKG file or directory")
    detok.add_argument("-o", "--output", type=Path, required=True, help="directory for FMAP files")
    detok.set_defaults(handler=run_detokenize)


def run_tokenize(args: argparse.Namespace) -> CommandResult:
    quantizer = args.quantizer or ("vq" if args.codebook is not None else "fsq")
    if quantizer == "vq" and args.codebook is None:
        raise UsageError("--quantizer vq needs --codebook")
    if quantizer == "fsq" and args.codebook is not None:
        raise UsageError("--quantizer fsq takes --levels, not --codebook")

    files, maps = load_feature_maps(args.input)
    if quantizer == "vq":
        book = quantizer_source(args)
        outputs = [vq_quantize(m, book, n_jobs=args.threads) for m in maps]
        vocab = book.size
    else:
        levels = levels_of(args, settings.FSQ_LEVELS)
        outputs = [fsq_quantize(m, levels, prebounded=args.prebounded) for m in maps]
        vocab = levels.size

    grids = [out.tokens for out in outputs]
    written = write_token_dir(args.output, stems(files), grids)
    usage = codebook_usage(grids, vocab)
    logger.info(f"Tokenized {len(maps)} maps with {quantizer} into {args.output}")
    return CommandResult(
        report={
            "quantizer": quantizer,
            "files": len(written),
            "vocab_size": vocab,
            "quant_error": float(np.mean([out.quant_error for out in outputs])),
            "used": usage.used,
            "usage_percent": usage.usage_percent,
        },
        outputs=[str(p) for p in written],
        manifest_path=manifest_for_dir(args.output),
    )


def run_detokenize(args: argparse.Namespace) -> CommandResult:
    files, grids = load_token_grids(args.tokens)
    book = quantizer_source(args)
    if book is not None:
        maps = [book.lookup(g) for g in grids]
    else:
        levels = levels_of(args, settings.FSQ_LEVELS)
        maps = [fsq_detokenize(g, levels) for g in grids]

    written = write_feature_dir(args.output, stems(files), maps)
    logger.info(f"Detokenized {len(grids)} grids into {args.output}")
    return CommandResult(
        report={"files": len(written), "dim": maps[0].dim},
        outputs=[str(p) for p in written],
        manifest_path=manifest_for_dir(args.output),
    )
