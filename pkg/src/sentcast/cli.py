"""Command-line interface.

Subcommands: score, aggregate, design, insample, forecast, evaluate,
synth.  Exit codes: 0 success, 1 configuration error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import pipeline
from .config import ConfigError, load_config
from .corpus import CorpusFormatError
from .estimators import EstimationError
from .evaluation import EvaluationError
from .lexicon import LexiconError
from .realtime import VintageError

COMMANDS = {
    "score": pipeline.cmd_score,
    "aggregate": pipeline.cmd_aggregate,
    "design": pipeline.cmd_design,
    "insample": pipeline.cmd_insample,
    "forecast": pipeline.cmd_forecast,
    "evaluate": pipeline.cmd_evaluate,
    "synth": pipeline.cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sentcast",
        description="News-sentiment indicators and real-time forecast "
                    "evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or "").splitlines()[0])
        p.add_argument("--config", default=None,
                       help="key = value configuration file")
        p.add_argument("--seed", type=int, default=None,
                       help="master seed override")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    overrides = {"seed": args.seed, "out_dir": args.out}
    try:
        config = load_config(args.config, overrides)
        return COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (CorpusFormatError, LexiconError, VintageError, EvaluationError,
            FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except EstimationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
