import argparse
import logging
from pathlib import Path

from vqtk.cli.commands.common import given
from vqtk.cli.reports import CommandResult, manifest_for_file
from vqtk.cluster.kmeans import KMeansConfig, kmeans_fit, random_codebook
from vqtk.core.formats import read_codebook, write_codebook
from vqtk.core.types import pool_vectors
from vqtk.data.loaders import load_feature_maps
from vqtk.errors import DimensionMismatch, UsageError
from vqtk.quant.trainer import VqTrainConfig, train_codebook
from vqtk.utils.parallel import nearest_rows

logger = logging.getLogger(__name__)


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("build-codebook", parents=parents, help="build a codebook from feature maps")
    parser.add_argument("--method", choices=["cluster", "vq-ema", "random"], default="cluster")
    parser.add_argument("--k", type=int, help="codebook size N")
    parser.add_argument("-i", "--input", type=Path, required=True, help="FMAP file or directory")
    parser.add_argument("-o", "--output", type=Path, required=True, help="CBOK file to write")
    parser.add_argument("--normalize", action="store_true", help="L2-normalize features before clustering")
    parser.add_argument("--max-iters", type=int)
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--n-init", type=int)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--ema-decay", type=float)
    parser.add_argument("--dead-code-threshold", type=int)
    parser.add_argument("--init", type=Path, help="CBOK warm start (cluster) or initial codebook (vq-ema)")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> CommandResult:
    if args.k is not None and args.k < 1:
        raise UsageError(f"--k must be at least 1, got {args.k}")
    init = read_codebook(args.init) if args.init is not None else None
    k = args.k if args.k is not None else (init.size if init is not None else None)
    if k is None:
        raise UsageError("--k is required unless --init supplies the codebook size")

    _, maps = load_feature_maps(args.input)
    if init is not None and init.dim != maps[0].dim:
        raise DimensionMismatch(f"--init codebook dim {init.dim} does not match feature dim {maps[0].dim}")

    results = {}
    if args.method == "cluster":
        cfg = KMeansConfig(k=k, seed=args.seed, normalize=args.normalize,
                           **given(args, "max_iters", "batch_size", "tol", "n_init"))
        book, trace = kmeans_fit(maps, cfg, init=init.vectors if init is not None else None, n_jobs=args.threads)
        quant_error = trace.attrs["inertia"]
        results["inertia_trace"] = trace["inertia"].tolist()
    elif args.method == "vq-ema":
        start = init if init is not None else random_codebook(maps, k, seed=args.seed)
        if start.size != k:
            raise UsageError(f"--k {k} disagrees with --init codebook size {start.size}")
        cfg = VqTrainConfig(
            reinit_seed=args.seed,
            **given(args, "epochs", "ema_decay", "dead_code_threshold", "batch_size"),
        )
        book, trace = train_codebook(maps, start, cfg, n_jobs=args.threads)
        quant_error = float(nearest_rows(pool_vectors(maps), book.vectors, n_jobs=args.threads)[1].mean())
        results["quant_error_trace"] = trace["quant_error"].tolist()
    else:
        book = random_codebook(maps, k, seed=args.seed)
        trace = None
        quant_error = float(nearest_rows(pool_vectors(maps), book.vectors, n_jobs=args.threads)[1].mean())

    write_codebook(book, args.output)
    logger.info(f"Wrote {args.method} codebook N={book.size} d={book.dim} to {args.output}")
    return CommandResult(
        report={"method": args.method, "size": book.size, "dim": book.dim, "quant_error": quant_error},
        outputs=[str(args.output)],
        manifest_path=manifest_for_file(args.output),
        results=results,
        frame=trace,
    )
