import argparse
import logging
from pathlib import Path

from vqtk.cli.reports import CommandResult, manifest_for_file, write_csv
from vqtk.core.formats import read_codebook
from vqtk.data.loaders import load_token_grids
from vqtk.metrics.projection import export_codebook_projection

logger = logging.getLogger(__name__)


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("project-codebook", parents=parents,
                                   help="export a 2-D PCA projection of a codebook")
    parser.add_argument("--codebook", type=Path, required=True)
    parser.add_argument("-t", "--tokens", type=Path, help="TOKG corpus for per-code usage counts")
    parser.add_argument("-o", "--output", type=Path, required=True, help="CSV file to write")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> CommandResult:
    book = read_codebook(args.codebook)
    grids = load_token_grids(args.tokens)[1] if args.tokens is not None else None
    frame = export_codebook_projection(book, grids)
    write_csv(frame, args.output)
    return CommandResult(
        report={
            "codes": book.size,
            "dim": book.dim,
            "used": int((frame["usage"] > 0).sum()),
            "explained_variance": frame.attrs["explained_variance"],
        },
        outputs=[str(args.output)],
        manifest_path=manifest_for_file(args.output),
        frame=frame,
    )
