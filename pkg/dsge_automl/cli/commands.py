"""
Subcommand handlers. Each takes the parsed arguments and the app and
returns an exit status.
"""

import argparse
import logging
import math
import os

from dsge_automl.core.errors import ConfigError, ReplayMismatchError
from dsge_automl.core.grammar import load_grammar
from dsge_automl.harness import aggregate_reports, replay, run_experiment
from dsge_automl.io.component_loader import load_registry
from dsge_automl.io.config_loader import RunConfig, resolve_config

logger = logging.getLogger(__name__)

_COMMAND_KEYS = ("command", "handler", "log_level", "config", "experiment")


def cmd_run(args: argparse.Namespace, app) -> int:
    overrides = {k: v for k, v in vars(args).items() if k not in _COMMAND_KEYS}
    config_path = args.config
    if args.experiment:
        config_path = app.experiment_config(args.experiment)
        if not os.path.exists(config_path):
            known = ", ".join(app.list_experiments()) or "none"
            raise ConfigError(f"unknown experiment {args.experiment!r} (available: {known})")
    config: RunConfig = resolve_config(config_path, overrides)
    if config.component_library is None:
        config.component_library = app.component_library_path

    report = run_experiment(config, load_registry(config.component_library))
    best = report.best["individual"]
    print(f"best phenotype: {best['phenotype']}")
    print(f"cv fitness:     {report.best['cv_fitness']:.6f}")
    if "macro_f" in report.test_metrics:
        print(f"test macro-F:   {report.test_metrics['macro_f']:.6f}")
    print(f"generations:    {len(report.generations)}")
    print(f"output:         {config.out}")
    return 0


def cmd_replay(args: argparse.Namespace, app) -> int:
    registry = load_registry(args.component_library or app.component_library_path)
    try:
        result = replay(args.report, registry, args.grammar)
    except ReplayMismatchError as e:
        logger.error("Replay mismatch: %s", e)
        return 1
    print(f"phenotype:      {result.phenotype}")
    print(f"test macro-F:   {result.test_metrics['macro_f']:.6f}")
    print(f"stored macro-F: {result.stored_macro_f}")
    print(f"match:          {'yes' if result.macro_f_matches else 'no'}")
    return 0 if result.macro_f_matches else 1


def cmd_grammar_check(args: argparse.Namespace, app) -> int:
    grammar = load_grammar(args.grammar)
    count = grammar.combination_count()
    print(f"grammar:        {args.grammar}")
    print(f"nonterminals:   {len(grammar.nonterminals)}")
    print(f"productions:    {grammar.production_total}")
    print(f"start:          <{grammar.start}>")
    print(f"min depth:      {grammar.min_depth}")
    if math.isinf(count):
        print("combinations:   infinite (recursive grammar)")
    else:
        print(f"combinations:   {count}")
    return 0


def cmd_aggregate(args: argparse.Namespace, app) -> int:
    generations = aggregate_reports(args.reports, args.out, args.max_methods)
    print(f"{generations} generations written to {args.out}")
    return 0
