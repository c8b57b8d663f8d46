import argparse
import logging
from pathlib import Path
from typing import List, Optional

import numpy as np

from vqtk.cli.commands.common import add_quantizer_source, levels_of, quantizer_source
from vqtk.cli.reports import CommandResult, manifest_for_file
from vqtk.config import settings
from vqtk.core.formats import read_codebook
from vqtk.core.types import FeatureMap, GaussianStats
from vqtk.data.loaders import load_feature_maps, load_token_grids
from vqtk.errors import DimensionMismatch, ShapeMismatch, UsageError
from vqtk.metrics.frechet import feature_stats, frechet_distance
from vqtk.metrics.inception import inception_score, inception_score_splits, read_prob_matrix
from vqtk.metrics.perplexity import perplexity_report
from vqtk.metrics.usage import codebook_usage
from vqtk.objectives.kd import kd_loss
from vqtk.proposal.base import ProposalModel, UniformModel
from vqtk.proposal.ngram import load_ngram
from vqtk.quant.fsq import fsq_quantize
from vqtk.quant.vq import VqLossConfig, compose_total_loss, vq_loss, vq_quantize
from vqtk.schemas import FrechetReport, InceptionScoreReport, KdReport, VqLossReport

logger = logging.getLogger(__name__)


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("eval", parents=parents, help="evaluation metrics")
    actions = parser.add_subparsers(dest="action", metavar="<metric>")
    actions.required = True

    usage = actions.add_parser("usage", parents=parents, help="codebook usage of a token corpus")
    usage.add_argument("-t", "--tokens", type=Path, required=True)
    usage.add_argument("--vocab", type=int, required=True)
    usage.set_defaults(handler=run_usage)

    ppl = actions.add_parser("ppl", parents=parents, help="perplexity under a proposal model")
    ppl.add_argument("--model", required=True, help="'uniform' or an NGRM model file")
    ppl.add_argument("--vocab", type=int)
    ppl.add_argument("-t", "--tokens", type=Path, required=True)
    ppl.set_defaults(handler=run_ppl)

    frechet = actions.add_parser("frechet", parents=parents, help="Fréchet distance between two feature populations")
    frechet.add_argument("-a", type=Path, required=True)
    frechet.add_argument("-b", type=Path, required=True)
    frechet.set_defaults(handler=run_frechet)

    rfid = actions.add_parser("rfid", parents=parents,
                              help="Fréchet distance between features and their reconstructions")
    rfid.add_argument("-i", "--input", type=Path, required=True)
    add_quantizer_source(rfid)
    rfid.set_defaults(handler=run_rfid)

    score = actions.add_parser("is", parents=parents, help="Inception-Score-style diversity of class probabilities")
    score.add_argument("--probs", type=Path, required=True, help="CSV, one row per sample, no header")
    score.add_argument("--splits", type=int, default=1)
    score.set_defaults(handler=run_is)

    kd = actions.add_parser("kd", parents=parents, help="negative-cosine feature reconstruction loss")
    kd.add_argument("-r", "--recon", type=Path, required=True)
    kd.add_argument("-t", "--teacher", type=Path, required=True)
    kd.add_argument("--cosine-mode", choices=["per-position", "flat"], default="per-position")
    kd.set_defaults(handler=run_kd)

    loss = actions.add_parser("vq-loss", parents=parents, help="quantization loss of features against a codebook")
    loss.add_argument("-i", "--input", type=Path, required=True)
    loss.add_argument("--codebook", type=Path, required=True)
    loss.add_argument("--beta", type=float)
    loss.add_argument("--recon-loss", type=float, help="reconstruction loss to add to the total")
    loss.set_defaults(handler=run_vq_loss)


def _result(args: argparse.Namespace, report: dict) -> CommandResult:
    """Metric reports have no output file; the manifest sits beside --report when given."""
    manifest = manifest_for_file(Path(args.report)) if args.report else None
    return CommandResult(report=report, manifest_path=manifest)


def _vocab(args) -> Optional[int]:
    if args.vocab is not None and args.vocab < 1:
        raise UsageError(f"--vocab must be at least 1, got {args.vocab}")
    return args.vocab


def run_usage(args: argparse.Namespace) -> CommandResult:
    _, grids = load_token_grids(args.tokens)
    return _result(args, codebook_usage(grids, _vocab(args)).model_dump())


def _proposal(args) -> ProposalModel:
    vocab = _vocab(args)
    if args.model == "uniform":
        if vocab is None:
            raise UsageError("--model uniform needs --vocab")
        return UniformModel(vocab)
    model = load_ngram(args.model)
    if vocab is not None and vocab != model.vocab_size:
        raise DimensionMismatch(f"--vocab {vocab} does not match the model's vocabulary {model.vocab_size}")
    return model


def run_ppl(args: argparse.Namespace) -> CommandResult:
    model = _proposal(args)
    _, grids = load_token_grids(args.tokens)
    return _result(args, perplexity_report(model, grids).model_dump())


def _frechet_report(a: GaussianStats, b: GaussianStats) -> dict:
    report = FrechetReport(frechet_distance=frechet_distance(a, b), count_a=a.count, count_b=b.count, dim=a.dim)
    return report.model_dump()


def run_frechet(args: argparse.Namespace) -> CommandResult:
    a = feature_stats(load_feature_maps(args.a)[1])
    b = feature_stats(load_feature_maps(args.b)[1])
    return _result(args, _frechet_report(a, b))


def run_rfid(args: argparse.Namespace) -> CommandResult:
    _, maps = load_feature_maps(args.input)
    book = quantizer_source(args)
    if book is not None:
        recon = [vq_quantize(m, book, n_jobs=args.threads).code_vectors for m in maps]
    else:
        levels = levels_of(args, settings.FSQ_LEVELS)
        recon = [fsq_quantize(m, levels).code_vectors for m in maps]
    return _result(args, _frechet_report(feature_stats(maps), feature_stats(recon)))


def run_is(args: argparse.Namespace) -> CommandResult:
    probs = read_prob_matrix(args.probs)
    if args.splits == 1:
        report = InceptionScoreReport(inception_score=inception_score(probs),
                                      samples=probs.shape[0], classes=probs.shape[1])
    else:
        mean, std = inception_score_splits(probs, args.splits)
        report = InceptionScoreReport(inception_score=mean, samples=probs.shape[0], classes=probs.shape[1],
                                      splits=args.splits, split_std=std)
    return _result(args, report.model_dump())


def _paired(recon: List[FeatureMap], teacher: List[FeatureMap]) -> None:
    if len(recon) != len(teacher):
        raise ShapeMismatch(f"{len(recon)} reconstruction maps but {len(teacher)} teacher maps")


def run_kd(args: argparse.Namespace) -> CommandResult:
    _, recon = load_feature_maps(args.recon)
    _, teacher = load_feature_maps(args.teacher)
    _paired(recon, teacher)
    losses = [kd_loss(r, t, mode=args.cosine_mode) for r, t in zip(recon, teacher)]
    report = KdReport(kd_loss=float(np.mean(losses)), mode=args.cosine_mode,
                      positions=sum(m.positions for m in recon))
    return _result(args, report.model_dump())


def run_vq_loss(args: argparse.Namespace) -> CommandResult:
    _, maps = load_feature_maps(args.input)
    book = read_codebook(args.codebook)
    cfg = VqLossConfig(beta=args.beta) if args.beta is not None else VqLossConfig()
    terms = [vq_loss(m, book, vq_quantize(m, book, n_jobs=args.threads).tokens, cfg) for m in maps]
    total = float(np.mean([t.total for t in terms]))
    report = VqLossReport(
        total=total,
        codebook_term=float(np.mean([t.codebook_term for t in terms])),
        commitment_term=float(np.mean([t.commitment_term for t in terms])),
        beta=cfg.beta,
        composed_total=compose_total_loss(total, args.recon_loss) if args.recon_loss is not None else None,
    )
    return _result(args, report.model_dump())
