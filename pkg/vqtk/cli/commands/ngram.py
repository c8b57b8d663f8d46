import argparse
import logging
from pathlib import Path

from vqtk.cli.commands.common import given
from vqtk.cli.reports import CommandResult, manifest_for_dir, manifest_for_file
from vqtk.data.loaders import load_token_grids, write_token_dir
from vqtk.errors import DimensionMismatch, UsageError
from vqtk.metrics.perplexity import perplexity_report
from vqtk.proposal.ngram import NgramConfig, load_ngram, ngram_fit, sample_grids, save_ngram

logger = logging.getLogger(__name__)


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("ngram", parents=parents, help="fit, sample and score n-gram proposal models")
    actions = parser.add_subparsers(dest="action", metavar="<action>")
    actions.required = True

    fit = actions.add_parser("fit", parents=parents, help="fit an n-gram model on a token corpus")
    fit.add_argument("-t", "--tokens", type=Path, required=True)
    fit.add_argument("--vocab", type=int, required=True)
    fit.add_argument("--order", type=int)
    fit.add_argument("--alpha", type=float, help="additive smoothing")
    fit.add_argument("-o", "--output", type=Path, required=True, help="NGRM model file")
    fit.set_defaults(handler=run_fit)

    sample = actions.add_parser("sample", parents=parents, help="sample token grids from a model")
    sample.add_argument("--model", type=Path, required=True)
    sample.add_argument("--height", type=int, required=True)
    sample.add_argument("--width", type=int, required=True)
    sample.add_argument("--count", type=int, default=1)
    sample.add_argument("-o", "--output", type=Path, required=True, help="directory for TOKG files")
    sample.set_defaults(handler=run_sample)

    score = actions.add_parser("score", parents=parents, help="perplexity of a token corpus under a model")
    score.add_argument("--model", type=Path, required=True)
    score.add_argument("-t", "--tokens", type=Path, required=True)
    score.add_argument("--vocab", type=int)
    score.set_defaults(handler=run_score)


def run_fit(args: argparse.Namespace) -> CommandResult:
    cfg = NgramConfig(vocab_size=args.vocab, **given(args, "order", "alpha"))
    _, grids = load_token_grids(args.tokens)
    model = ngram_fit(grids, cfg)
    save_ngram(model, args.output)
    return CommandResult(
        report={
            "order": model.order,
            "vocab_size": model.vocab_size,
            "alpha": model.alpha,
            "contexts": len(model.counts),
            "entries": model.entry_count,
        },
        outputs=[str(args.output)],
        manifest_path=manifest_for_file(args.output),
    )


def run_sample(args: argparse.Namespace) -> CommandResult:
    for name in ("height", "width", "count"):
        if getattr(args, name) < 1:
            raise UsageError(f"--{name} must be at least 1, got {getattr(args, name)}")
    model = load_ngram(args.model)
    grids = sample_grids(model, args.height, args.width, args.count, seed=args.seed)
    names = [f"sample_{i:04d}" for i in range(len(grids))]
    written = write_token_dir(args.output, names, grids)
    logger.info(f"Sampled {len(grids)} {args.height}x{args.width} grids into {args.output}")
    return CommandResult(
        report={"count": len(grids), "height": args.height, "width": args.width},
        outputs=[str(p) for p in written],
        manifest_path=manifest_for_dir(args.output),
    )


def run_score(args: argparse.Namespace) -> CommandResult:
    model = load_ngram(args.model)
    if args.vocab is not None and args.vocab != model.vocab_size:
        raise DimensionMismatch(f"--vocab {args.vocab} does not match the model's vocabulary {model.vocab_size}")
    _, grids = load_token_grids(args.tokens)
    report = perplexity_report(model, grids).model_dump()
    manifest = manifest_for_file(Path(args.report)) if args.report else None
    return CommandResult(report=report, manifest_path=manifest)
