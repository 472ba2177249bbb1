"""This module contains the argument parser and the entry point of the command-line interface.

Exit codes: 0 on success, 1 for user errors (bad flags, invalid config or data, missing files),
2 for internal errors, training divergence included.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from pydantic import ValidationError

from pyvhrnn.cli import commands
from pyvhrnn.objectives import Bounds
from pyvhrnn.synthdata import SynthSettings
from pyvhrnn.utils import env

EXIT_OK = 0
EXIT_USER_ERROR = 1
EXIT_INTERNAL_ERROR = 2
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class CliParser(argparse.ArgumentParser):
    """ArgumentParser which exits with the user-error code on bad flags."""

    def error(self, message: str):  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USER_ERROR, f"{self.prog}: error: {message}\n")


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=env.seed(), help="Random seed.")
    common.add_argument(
        "--workers", type=int, default=env.workers() or 1, help="Evaluation worker threads."
    )
    common.add_argument(
        "--log-level",
        default=env.log_level() or "WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        type=str.upper,
        help="Logging level.",
    )
    return common


def _config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="INI run config.")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="Override a config key, repeatable.",
    )


def _data_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--checkpoint", required=True, help="Checkpoint file.")
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--data", help="JSONL dataset, the run's test set when omitted.")
    source.add_argument("--setting", choices=SynthSettings.ALL, help="Synthetic setting.")


def build_parser() -> CliParser:
    """Builds the parser with the gen-data, train, eval, diagnose, params and sample commands."""
    common = _common_flags()
    parser = CliParser(prog="pyvhrnn", description="Variational hyper RNN toolkit.")
    subparsers = parser.add_subparsers(dest="command", required=True)

    gen = subparsers.add_parser("gen-data", parents=[common], help="Generate a synthetic dataset.")
    gen.add_argument("--setting", required=True, choices=SynthSettings.ALL)
    gen.add_argument("--out", help="Output JSONL file, data/<setting>.jsonl by default.")
    _config_flags(gen)
    gen.set_defaults(handler=commands.cmd_gen_data)

    trainer = subparsers.add_parser("train", parents=[common], help="Train a model.")
    _config_flags(trainer)
    trainer.add_argument("--out", help="Output directory, overrides [run] out.")
    trainer.add_argument("--from-checkpoint", help="Resume from a last.ckpt.")
    trainer.set_defaults(handler=commands.cmd_train)

    evaluator = subparsers.add_parser("eval", parents=[common], help="Evaluate a checkpoint.")
    _data_flags(evaluator)
    evaluator.add_argument("--bound", choices=[Bounds.ELBO, Bounds.IWAE, Bounds.FIVO])
    evaluator.add_argument("--particles", type=int, help="K, [objective] eval_particles by default.")
    evaluator.add_argument("--kl", choices=["sampled", "analytic"], help="The ELBO form.")
    evaluator.add_argument("--battery", action="store_true", help="Evaluate every battery setting.")
    evaluator.add_argument("--out", help="Output CSV file.")
    evaluator.set_defaults(handler=commands.cmd_eval)

    diagnose = subparsers.add_parser("diagnose", parents=[common], help="Trace one sequence.")
    _data_flags(diagnose)
    diagnose.add_argument("--index", type=int, default=0, help="Sequence index.")
    diagnose.add_argument("--samples", type=int, default=1, help="Latent draws per step.")
    diagnose.add_argument("--posterior-mean", action="store_true", help="Use posterior means.")
    diagnose.add_argument("--out", help="Output directory.")
    diagnose.set_defaults(handler=commands.cmd_diagnose)

    params = subparsers.add_parser("params", parents=[common], help="Parameter-count report.")
    params.add_argument("--out", help="Output CSV file.")
    params.set_defaults(handler=commands.cmd_params)

    sample = subparsers.add_parser("sample", parents=[common], help="Generate from a checkpoint.")
    sample.add_argument("--checkpoint", required=True, help="Checkpoint file.")
    sample.add_argument("--steps", type=int, default=30, help="Sequence length.")
    sample.add_argument("--count", type=int, default=10, help="Number of sequences.")
    sample.add_argument("--out", help="Output JSONL file.")
    sample.set_defaults(handler=commands.cmd_sample)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Parses the arguments, runs the command and returns the exit code.

    Examples:
        ```python
        main(["gen-data", "--setting", "train", "--seed", "7"])  # 0
        ```
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT, force=True)
    logger = logging.getLogger("pyvhrnn")
    try:
        return args.handler(args, logger)
    except (ValidationError, ValueError, FileNotFoundError) as e:
        logger.error("%s", e)
        print(f"pyvhrnn {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USER_ERROR
    except Exception as e:  # pylint: disable=broad-exception-caught
        logger.exception("Internal error in %s", args.command)
        print(f"pyvhrnn {args.command}: internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL_ERROR


def run() -> None:
    """Console-script entry point."""
    sys.exit(main())
