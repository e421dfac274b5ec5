"""Entry point for running CAPFI as a module."""

import argparse
import sys
from pathlib import Path
from typing import Any, Optional

import pydantic
from loguru import logger

from capfi import __version__
from capfi.config.config_manager import ConfigManager
from capfi.config.settings import ExportFormat, RunConfig
from capfi.utils.exceptions import (
    CapfiError,
    ConfigError,
    GenerationError,
    LayoutMismatchError,
    ManifestError,
    UnknownNotationError,
    ValidationError,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

CONFIG_ERRORS = (
    ConfigError,
    ValidationError,
    UnknownNotationError,
    ManifestError,
    GenerationError,
    LayoutMismatchError,
)


def _split(value: Optional[str]) -> Optional[list[str]]:
    if value is None:
        return None
    return [item.strip() for item in value.split(",") if item.strip()]


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per operation."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--debug", action="store_true", help="Enable debug mode")
    common.add_argument("--log-dir", type=Path, default=None, help="Log directory")

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--config", type=Path, default=None, help="RunConfig JSON file; flags override it")
    run.add_argument("--dataset", type=Path, help="Manifest JSON file")
    run.add_argument(
        "--oracle",
        action="append",
        dest="oracles",
        help="builtin:<cfgpath> or exec:<command> (repeatable)",
    )
    run.add_argument(
        "--contexts",
        help="Comma list of notations, set expressions or keywords (base, hazards, all)",
    )
    run.add_argument("--features", help="Comma list of modalities to permute")
    run.add_argument("--seed", type=int, help="Permutation seed (mandatory)")
    run.add_argument("--metrics", help="Comma list of acc, auc, f1")
    run.add_argument("--out", type=Path, help="Output directory")
    run.add_argument(
        "--format",
        action="append",
        dest="formats",
        choices=[f.value for f in ExportFormat],
        help="Output format (repeatable)",
    )
    run.add_argument("--repetitions", type=int, help="Repetitions per cell (default: context size)")
    run.add_argument("--workers", type=int, help="Worker threads for engine cells")

    parser = argparse.ArgumentParser(
        prog="capfi", description="Context-aware permutation feature importance toolkit"
    )
    parser.add_argument("--version", action="version", version=f"capfi {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("baseline", parents=[common, run], help="Metric triple per oracle and context")
    sub.add_parser("capfi", parents=[common, run], help="Permutation importance per context")
    cross = sub.add_parser("cross", parents=[common, run], help="Cross-context feature swapping")
    cross.add_argument("--source", help="Source context expression")
    cross.add_argument("--donor", help="Donor context expression")

    synth = sub.add_parser("synth", parents=[common], help="Generate a synthetic manifest")
    synth.add_argument("--spec", type=Path, required=True, help="GeneratorSpec JSON file")
    synth.add_argument("--out", type=Path, required=True, help="Manifest path to write")
    synth.add_argument("--sidecar", action="store_true", help="Store embeddings in a binary sidecar")
    return parser


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Merge an optional RunConfig file with explicit flags.

    Raises:
        ConfigError: When the merged values do not validate.
    """
    values: dict[str, Any] = {}
    if args.config is not None:
        values = ConfigManager(args.config, RunConfig).load().model_dump()

    flags: dict[str, Any] = {
        "dataset": args.dataset,
        "oracles": args.oracles,
        "contexts": _split(args.contexts),
        "features": _split(args.features),
        "seed": args.seed,
        "metrics": _split(args.metrics),
        "out": args.out,
        "formats": args.formats,
        "source": getattr(args, "source", None),
        "donor": getattr(args, "donor", None),
    }
    values.update({key: value for key, value in flags.items() if value is not None})

    engine = dict(values.get("engine") or {})
    if args.repetitions is not None:
        engine["repetitions"] = args.repetitions
    if args.workers is not None:
        engine["max_workers"] = args.workers
    values["engine"] = engine

    try:
        return RunConfig.model_validate(values)
    except pydantic.ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in exc.errors()
        )
        raise ConfigError(f"Invalid run configuration: {problems}") from exc


def cli_main(argv: Optional[list[str]] = None) -> int:
    """CLI entry point with argument parsing.

    Returns:
        Exit code: 0 success, 1 runtime failure, 2 configuration or validation failure.
    """
    from capfi.app import run_command

    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        if args.command == "synth":
            run_command(
                "synth",
                spec_path=args.spec,
                out_path=args.out,
                sidecar=args.sidecar,
                debug=args.debug,
                log_dir=args.log_dir,
            )
        else:
            config = build_run_config(args)
            run_command(args.command, config=config, debug=args.debug, log_dir=args.log_dir)
    except CONFIG_ERRORS as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapfiError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as exc:
        logger.exception(f"Unexpected failure: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(cli_main())
