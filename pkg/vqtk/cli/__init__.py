"""Batch command line: ``vqtk [global flags] <command> ...``.

Exit codes: 0 success, 1 unexpected failure, 2 usage, 3 data, 4 numeric,
5 I/O. Reports go to stdout, logs to stderr.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import pandas as pd
from dotenv import dotenv_values
from pydantic import ValidationError

from vqtk import __version__
from vqtk.cli.commands import register_commands
from vqtk.cli.reports import CommandResult, emit_report, write_csv, write_manifest
from vqtk.config import settings
from vqtk.errors import IoError, UsageError, VqtkError
from vqtk.schemas import RunManifest
from vqtk.utils.logger import setup_logger

logger = logging.getLogger(__name__)

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off", ""}
_NOT_PARAMS = {"handler", "config", "json", "log_level", "report"}


def _add_global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    """Flags accepted both before and after the command name.

    On command parsers every default is SUPPRESS, so a flag only lands in the
    namespace when given there and the top-level value stands otherwise.
    """
    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--seed", type=int, default=default(settings.SEED), help="base PRNG seed")
    parser.add_argument("--threads", type=int, default=default(settings.THREADS), help="worker thread cap")
    parser.add_argument("--config", default=default(None), help="key=value file of option defaults")
    parser.add_argument("--json", action="store_true", default=default(False),
                        help="print the report as one JSON object")
    parser.add_argument("--log-level", default=default(settings.LOG_LEVEL.upper()), type=str.upper,
                        choices=LOG_LEVELS)
    parser.add_argument("--report", default=default(None), help="also write the report table to this CSV file")


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vqtk",
        description="Vector-quantization toolkit: codebooks, tokenizers, proposal models and metrics.",
    )
    _add_global_flags(parser, suppress=False)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    command_flags = argparse.ArgumentParser(add_help=False)
    _add_global_flags(command_flags, suppress=True)

    subparsers = parser.add_subparsers(dest="command", metavar="<command>")
    subparsers.required = True
    register_commands(subparsers, [command_flags])
    return parser


def _to_bool(key: str, raw: str) -> bool:
    value = raw.strip().lower()
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise UsageError(f"config key {key!r} expects a boolean, got {raw!r}")


def _set_defaults(parser: argparse.ArgumentParser, values: Dict[str, str], used: set) -> None:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                _set_defaults(sub, values, used)
        elif action.dest in values and action.default is not argparse.SUPPRESS:
            raw = values[action.dest]
            if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                parser.set_defaults(**{action.dest: _to_bool(action.dest, raw)})
            else:
                parser.set_defaults(**{action.dest: raw})
            used.add(action.dest)


def apply_config_file(parser: argparse.ArgumentParser, argv: Sequence[str]) -> Tuple[Optional[str], Dict[str, str]]:
    """Install ``--config`` values as parser defaults so explicit flags still win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return None, {}

    path = Path(known.config)
    if not path.is_file():
        raise IoError(f"config file not found: {path}")
    raw = {k.replace("-", "_"): v for k, v in dotenv_values(path).items() if v is not None}
    used: set = set()
    _set_defaults(parser, raw, used)
    for key in sorted(set(raw) - used):
        logger.warning(f"config key {key!r} matches no option; ignored")
    return str(path), raw


def _params(args: argparse.Namespace) -> Dict[str, Any]:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_PARAMS}


def _finish(args: argparse.Namespace, result: CommandResult,
            config_path: Optional[str], config_values: Dict[str, str]) -> None:
    emit_report(result.report, args.json, sys.stdout)
    if args.report:
        frame = result.frame if result.frame is not None else pd.DataFrame([result.report])
        write_csv(frame, Path(args.report))
    if result.manifest_path is not None:
        manifest = RunManifest(
            tool_version=__version__,
            command=args.command if not getattr(args, "action", None) else f"{args.command} {args.action}",
            params=_params(args),
            config_file=config_path,
            config_values=config_values,
            seed=args.seed,
            threads=args.threads,
            outputs=result.outputs,
            results={**result.report, **result.results},
        )
        write_manifest(manifest, result.manifest_path)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    setup_logger("vqtk", settings.LOG_LEVEL)
    parser = create_parser()

    try:
        config_path, config_values = apply_config_file(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    except VqtkError as e:
        logger.error(e.message)
        return e.exit_code

    setup_logger("vqtk", args.log_level)
    try:
        if args.threads < 1:
            raise UsageError(f"--threads must be at least 1, got {args.threads}")
        if args.seed < 0:
            raise UsageError(f"--seed must be nonnegative, got {args.seed}")
        result = args.handler(args)
        _finish(args, result, config_path, config_values)
    except VqtkError as e:
        logger.error(e.message)
        return e.exit_code
    except ValidationError as e:
        logger.error(f"invalid parameters: {e}")
        return UsageError.exit_code
    except Exception as e:
        logger.exception(f"unexpected error: {e}")
        return VqtkError.exit_code
    return 0
