"""
Hydride Discovery

Command-line entry point. Each subcommand runs one pipeline stage; ``run``
executes all of them in order. Exit codes: 0 success, 2 missing input,
3 validation failure, 4 numeric divergence, 1 anything else.
"""

from pathlib import Path
from typing import Any, Dict, Optional, Sequence
import argparse
import logging
import sys

from pydantic import ValidationError

from src import __version__
from src.errors import HydrideDiscoveryError, ValidationFailure
from src.pipeline import DiscoveryWorkflow
from src.utils.config import Settings, load_settings
from src.utils.log import configure_logging

logger = logging.getLogger(__name__)


def _common_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", type=Path, help="Flat key = value config file")
    parser.add_argument("--seed", type=int, help="Seed for all randomness")
    parser.add_argument("--output", dest="output_root", type=Path, help="Output root directory")
    parser.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--json-logs", dest="json_logs", action="store_true", default=None)
    parser.add_argument("--variant", dest="score_variant", choices=["original", "modified"])
    return parser


def _add_ingest_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset", dest="dataset_path", type=Path, help="CSV or JSON-lines export")
    parser.add_argument("--synthetic", type=int, metavar="N", help="Synthesize N records instead")
    parser.add_argument("--strict", dest="strict_loading", action="store_true", default=None)


def _add_causal_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--ci-test", dest="ci_test", choices=["chi-square", "fisher-z"])
    parser.add_argument("--target", dest="target_variable")
    parser.add_argument("--exclude", dest="excluded_variables", help="Comma-separated variables")


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--latent-dim", dest="latent_dim", type=int)
    parser.add_argument("--learning-rate", dest="learning_rate", type=float)
    parser.add_argument("--beta", type=float)


def _add_generate_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", dest="n_generate", type=int, help="Candidates to generate")
    parser.add_argument("--steps", dest="latent_steps", type=int, help="Latent optimization steps")


def _add_screen_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--top-k", dest="top_k", type=int)
    parser.add_argument("--strict-metal-cap", dest="strict_metal_cap", action="store_true", default=None)
    parser.add_argument("--soft-metal-cap", dest="soft_metal_cap", type=int)
    parser.add_argument("--min-score", dest="min_score", type=float)
    parser.add_argument(
        "--restrict-element-count", dest="restrict_element_count", action="store_true", default=None
    )
    parser.add_argument(
        "--metalloids-as-metals", dest="metalloids_as_metals", action="store_true", default=None
    )


def _add_accuracy_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--reference-db", dest="reference_db_path", type=Path)


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="hydride-discovery", description="Metal hydride discovery pipeline"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", parents=[common], help="Load, validate and split records")
    _add_ingest_flags(ingest)
    score = sub.add_parser("score", parents=[common], help="Score records")
    score.add_argument("--input", type=Path, help="Records to score (defaults to ingested records)")
    score.add_argument("--stated-mae", dest="stated_mae", type=float, help="MAE to compare against")
    _add_causal_flags(sub.add_parser("causal", parents=[common], help="Learn a PAG"))
    sub.add_parser("pcr", parents=[common], help="Feature-subset PCR experiment")
    _add_train_flags(sub.add_parser("train", parents=[common], help="Train the autoencoder"))
    _add_generate_flags(sub.add_parser("generate", parents=[common], help="Generate candidates"))
    _add_screen_flags(sub.add_parser("screen", parents=[common], help="Filter and rank candidates"))
    _add_accuracy_flags(sub.add_parser("accuracy", parents=[common], help="Reference matching curves"))
    sub.add_parser("report", parents=[common], help="Consolidated run report")

    run = sub.add_parser("run", parents=[common], help="Run every stage")
    for add in (
        _add_ingest_flags, _add_causal_flags, _add_train_flags,
        _add_generate_flags, _add_screen_flags, _add_accuracy_flags,
    ):
        add(run)
    return parser


SETTING_KEYS = set(Settings.model_fields)


def _settings_from(args: argparse.Namespace) -> Settings:
    overrides: Dict[str, Any] = {
        key: value for key, value in vars(args).items() if key in SETTING_KEYS
    }
    return load_settings(args.config, **overrides)


def _dispatch(workflow: DiscoveryWorkflow, args: argparse.Namespace) -> None:
    command = args.command
    if command == "ingest":
        workflow.ingest(args.dataset_path, args.synthetic)
    elif command == "score":
        workflow.score(args.input, args.stated_mae)
    elif command == "causal":
        workflow.causal()
    elif command == "pcr":
        workflow.pcr()
    elif command == "train":
        workflow.train()
    elif command == "generate":
        workflow.generate()
    elif command == "screen":
        workflow.screen()
    elif command == "accuracy":
        workflow.accuracy(args.reference_db_path)
    elif command == "report":
        workflow.report()
    elif command == "run":
        workflow.run_all(args.dataset_path, args.synthetic)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments, run the requested stage and return the exit code.

    Args:
        argv: Arguments without the program name; defaults to sys.argv[1:]

    Returns:
        Process exit code
    """
    args = build_parser().parse_args(argv)
    try:
        settings = _settings_from(args)
        configure_logging(settings.log_level, settings.json_logs)
        if args.command in ("ingest", "run") and args.synthetic is None and settings.dataset_path is None:
            args.synthetic = settings.synthetic_records
            logger.info(f"No dataset given; synthesizing {args.synthetic} records")
        _dispatch(DiscoveryWorkflow(settings), args)
    except HydrideDiscoveryError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except ValidationError as e:
        logger.error(f"Validation failed: {e}")
        return ValidationFailure.exit_code
    except Exception:
        logger.exception("Unexpected failure")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
