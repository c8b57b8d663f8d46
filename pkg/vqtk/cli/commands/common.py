"""Argument helpers shared by the command modules."""
import argparse
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from vqtk.core.formats import read_codebook
from vqtk.core.types import Codebook
from vqtk.errors import UsageError
from vqtk.quant.fsq import FsqLevels, parse_levels

logger = logging.getLogger(__name__)


def int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def given(args: argparse.Namespace, *names: str) -> Dict[str, Any]:
    """Options the user (or config file) actually set; the rest fall back to Settings."""
    return {name: getattr(args, name) for name in names if getattr(args, name, None) is not None}


def add_quantizer_source(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--codebook", type=Path, help="CBOK codebook for the vq quantizer")
    source.add_argument("--levels", help="comma-separated FSQ levels, e.g. 8,8,5,5,5")


def quantizer_source(args: argparse.Namespace) -> Optional[Codebook]:
    """The codebook when ``--codebook`` is given; ``None`` means FSQ."""
    if args.codebook is not None:
        return read_codebook(args.codebook)
    if args.levels is None:
        raise UsageError("one of --codebook or --levels is required")
    return None


def levels_of(args: argparse.Namespace, fallback: str) -> FsqLevels:
    return parse_levels(args.levels if args.levels is not None else fallback)


def stems(paths: List[Path]) -> List[str]:
    return [p.stem for p in paths]


def log_progress(step: str, status: str, message: str) -> None:
    """ProgressTracker callback for batch runs."""
    logger.info(f"[{step}] {status}: {message}")
