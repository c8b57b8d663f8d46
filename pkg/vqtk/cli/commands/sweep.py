import argparse
import logging
from pathlib import Path

from vqtk.cli.commands.common import given, int_list, log_progress
from vqtk.cli.reports import CommandResult, manifest_for_file, write_csv
from vqtk.data.loaders import load_feature_maps
from vqtk.data.synthetic import GaussianMixtureWorld, WorldConfig
from vqtk.errors import UsageError
from vqtk.sweep import SweepConfig, run_sweep
from vqtk.utils.progress_tracker import ProgressTracker

logger = logging.getLogger(__name__)


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("sweep", parents=parents, help="codebook size / dimension sweep")
    parser.add_argument("--sizes", type=int_list, help="comma-separated codebook sizes")
    parser.add_argument("--dims", type=int_list, help="comma-separated feature dims (PCA projection)")
    parser.add_argument("-i", "--input", type=Path, help="FMAP inputs; default is a synthetic mixture")
    parser.add_argument("--maps", type=int, default=32, help="synthetic maps when no --input")
    parser.add_argument("--components", type=int, help="synthetic mixture components")
    parser.add_argument("--modes-per-component", type=int, help="synthetic sub-modes per component")
    parser.add_argument("--max-iters", type=int)
    parser.add_argument("--n-init", type=int)
    parser.add_argument("--order", type=int)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("-o", "--output", type=Path, required=True, help="CSV file to write")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> CommandResult:
    cfg = SweepConfig(seed=args.seed, **given(args, "sizes", "dims", "max_iters", "n_init", "order", "alpha"))
    if args.input is not None:
        _, maps = load_feature_maps(args.input)
        source = str(args.input)
    else:
        if args.maps < 1:
            raise UsageError(f"--maps must be at least 1, got {args.maps}")
        world = GaussianMixtureWorld(WorldConfig(**given(args, "components", "modes_per_component")), seed=args.seed)
        maps = world.sample(args.maps, seed=args.seed + 1)
        source = f"synthetic:{world.n_modes}-modes"

    frame = run_sweep(maps, cfg, n_jobs=args.threads, progress_tracker=ProgressTracker(log_progress))
    write_csv(frame, args.output)
    return CommandResult(
        report={"cells": len(frame), "source": source, "sizes": cfg.sizes,
                "dims": cfg.dims or [maps[0].dim]},
        outputs=[str(args.output)],
        manifest_path=manifest_for_file(args.output),
        results={"rows": frame.to_dict(orient="records")},
        frame=frame,
    )
