"""
Tabular exports of run statistics.

- generations.csv: one row per generation of a run
- aggregate CSV: per-generation method percentages across runs
"""

import logging
import os
from typing import Sequence

import pandas as pd

from dsge_automl.core.evolution import GenerationRecord
from dsge_automl.core.reporting import aggregate_best_frequencies, generation_rows

logger = logging.getLogger(__name__)

GENERATIONS_FILE = "generations.csv"


def generations_frame(records: Sequence[GenerationRecord]) -> pd.DataFrame:
    """Per-generation statistics; method-frequency columns missing in a generation are 0."""
    frame = pd.DataFrame(generation_rows(records))
    freq_columns = [c for c in frame.columns if ":" in c]
    if freq_columns:
        frame[freq_columns] = frame[freq_columns].fillna(0.0)
    return frame


def write_generations_csv(records: Sequence[GenerationRecord], filepath: str) -> None:
    generations_frame(records).to_csv(filepath, index=False)
    logger.info("Generation statistics written to %s", filepath)


def aggregate_frame(runs: Sequence[Sequence[GenerationRecord]], max_methods: int = 0) -> pd.DataFrame:
    """
    Percentage of runs whose best pipeline of each generation uses each method.

    Columns are `generation` followed by `<category>:<method>` in percent.
    """
    rows = []
    for entry in aggregate_best_frequencies(runs, max_methods):
        row = {"generation": entry["generation"]}
        for category in ("preprocessing", "classifier"):
            for name, fraction in entry[category].items():
                row[f"{category}:{name}"] = 100.0 * fraction
        rows.append(row)
    frame = pd.DataFrame(rows)
    if len(frame.columns) > 1:
        columns = ["generation"] + sorted(c for c in frame.columns if c != "generation")
        frame = frame[columns].fillna(0.0)
    return frame


def write_aggregate_csv(runs: Sequence[Sequence[GenerationRecord]], filepath: str,
                        max_methods: int = 0) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(filepath)), exist_ok=True)
    aggregate_frame(runs, max_methods).to_csv(filepath, index=False)
    logger.info("Aggregated frequencies of %d runs written to %s", len(runs), filepath)
