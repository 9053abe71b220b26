"""
Command-line front end.

    run            evolve a pipeline for a dataset
    replay         re-evaluate the best pipeline of a report
    grammar-check  validate a grammar and count its sentences
    aggregate      cross-run method frequencies of several reports
"""

import argparse
import logging
import sys
from typing import Optional

from dsge_automl import __version__
from dsge_automl.cli import commands
from dsge_automl.core.errors import DsgeAutoMLError
from dsge_automl.io.config_loader import add_config_arguments

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsge-automl",
        description="Grammar-based evolution of classification pipelines.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default="INFO",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="logging verbosity (default INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evolve a pipeline for a dataset")
    source = run.add_mutually_exclusive_group()
    source.add_argument("--config", help="JSON run configuration")
    source.add_argument("--experiment", help="name of a directory under experiments/")
    add_config_arguments(run)
    run.set_defaults(handler=commands.cmd_run)

    replay = sub.add_parser("replay", help="re-evaluate the best pipeline of a report")
    replay.add_argument("--report", required=True, help="report.json of a run")
    replay.add_argument("--grammar", help="grammar file to map with (default: the one stored in the report)")
    replay.add_argument("--component-library", dest="component_library",
                        help="component library directory")
    replay.set_defaults(handler=commands.cmd_replay)

    check = sub.add_parser("grammar-check", help="validate a grammar and count its sentences")
    check.add_argument("--grammar", required=True, help="grammar file (.bnf)")
    check.set_defaults(handler=commands.cmd_grammar_check)

    aggregate = sub.add_parser("aggregate", help="method frequencies of the best pipelines across runs")
    aggregate.add_argument("reports", nargs="+", help="report.json files")
    aggregate.add_argument("--out", required=True, help="CSV file to write")
    aggregate.add_argument("--max-methods", type=int, default=0,
                           help="methods kept per category before folding into 'others' (0 = all)")
    aggregate.set_defaults(handler=commands.cmd_aggregate)
    return parser


def main(argv: Optional[list[str]] = None, app=None) -> int:
    """
    Parse arguments and run a subcommand.

    Returns:
        0 on success, 1 on a reported error (argparse exits with 2 on bad arguments)
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT, force=True)

    if app is None:
        from dsge_automl.app import AutoMLApp
        app = AutoMLApp()
    try:
        return args.handler(args, app)
    except (DsgeAutoMLError, OSError) as e:
        logger.error("%s", e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
