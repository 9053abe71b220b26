"""
Run orchestration.

- run_experiment: outer split, evolution on the train part, final fit and
  test evaluation, report files
- replay: rebuild the best pipeline of a report and check it reproduces
- aggregate_reports: cross-run method frequencies
"""

import logging
import os
import time
from dataclasses import dataclass
from datetime import datetime
from typing import Optional, Sequence

import numpy as np

from dsge_automl.core.cancel import CancelToken
from dsge_automl.core.components import ComponentRegistry
from dsge_automl.core.dsge import Phenotype, map_genotype
from dsge_automl.core.errors import (
    ComponentFailure,
    DsgeAutoMLError,
    MappingError,
    ReplayMismatchError,
)
from dsge_automl.core.evolution import (
    WORST_FITNESS,
    EvolutionEngine,
    GenerationRecord,
    Individual,
    derive_seed,
)
from dsge_automl.core.grammar import Grammar, load_grammar, parse_grammar
from dsge_automl.core.pipeline import PipelineSpec, compile_phenotype, fit_predict
from dsge_automl.core.reporting import RunReport, method_frequencies
from dsge_automl.io.component_loader import load_registry
from dsge_automl.io.config_loader import EXECUTION_KEYS, RunConfig
from dsge_automl.io.export_pipeline import write_best_pipeline
from dsge_automl.io.export_stats import GENERATIONS_FILE, write_aggregate_csv, write_generations_csv
from dsge_automl.io.report_io import REPORT_FILE, load_report, save_report
from dsge_automl.ml.dataset import Dataset, load_csv
from dsge_automl.ml.metrics import classification_report
from dsge_automl.ml.validation import FoldPlan, cv_fitness, stratified_folds, stratified_holdout

logger = logging.getLogger(__name__)

# Stream keys for derive_seed; generation streams use (generation, slot)
OUTER_SPLIT_STREAM = 0x5EED_0001_0000_0000
INNER_FOLD_STREAM = 0x5EED_0002_0000_0000
MODEL_STREAM = 0x5EED_0003_0000_0000


def default_component_library() -> str:
    from dsge_automl.app import AutoMLApp
    return AutoMLApp().component_library_path


def _registry_for(config: RunConfig, registry: Optional[ComponentRegistry]) -> ComponentRegistry:
    if registry is not None:
        return registry
    return load_registry(config.component_library or default_component_library())


def model_seed(master_seed: int) -> int:
    return derive_seed(master_seed, MODEL_STREAM)


def outer_split(dataset: Dataset, config: RunConfig) -> tuple[np.ndarray, np.ndarray]:
    """(train rows, test rows) of the outer protocol."""
    rng = np.random.default_rng(derive_seed(config.effective_split_seed, OUTER_SPLIT_STREAM))
    fold = config.outer_fold_index()
    if fold is None:
        return stratified_holdout(dataset, config.holdout_fraction, rng)
    index, k = fold
    plan = stratified_folds(dataset, k, rng)
    return plan.train_indices(index), plan.test_indices(index)


def inner_plan(train: Dataset, config: RunConfig) -> FoldPlan:
    rng = np.random.default_rng(derive_seed(config.seed, INNER_FOLD_STREAM))
    return stratified_folds(train, config.inner_k, rng)


def make_evaluator(train: Dataset, plan: FoldPlan, registry: ComponentRegistry, seed: int):
    """Fitness function: compile, then mean macro-F over the fixed inner folds."""
    def evaluate(pheno: Phenotype, cancel: CancelToken) -> float:
        spec = compile_phenotype(pheno, registry)
        return cv_fitness(spec, train, plan, registry, cancel=cancel, seed=seed)
    return evaluate


def final_evaluation(spec: PipelineSpec, train: Dataset, test: Dataset,
                     registry: ComponentRegistry, seed: int) -> dict:
    """Fit on all train rows, score once on the test rows."""
    predictions = fit_predict(spec, train, test, registry, seed=seed)
    return classification_report(test.labels, predictions, train.n_classes)


def run_experiment(config: RunConfig, registry: Optional[ComponentRegistry] = None,
                   write_files: bool = True) -> RunReport:
    """
    Run one experiment end to end.

    Args:
        config: Validated run configuration
        registry: Component registry (default: load config.component_library)
        write_files: Write report.json, generations.csv and best_pipeline.* to config.out

    Returns:
        The run report
    """
    started_at = datetime.now().isoformat(timespec="seconds")
    t0 = time.perf_counter()
    registry = _registry_for(config, registry)

    grammar = load_grammar(config.grammar)
    with open(config.grammar, "r") as f:
        grammar_source = f.read()
    dataset = load_csv(config.dataset, config.label, config.missing_token)

    train_rows, test_rows = outer_split(dataset, config)
    train, test = dataset.subset(train_rows), dataset.subset(test_rows)
    plan = inner_plan(train, config)
    seed = model_seed(config.seed)
    logger.info("Outer split: %d train rows, %d test rows, %d inner folds",
                len(train_rows), len(test_rows), plan.k)

    engine = EvolutionEngine(grammar, config.evolution_config(), make_evaluator(train, plan, registry, seed))

    def record_frequencies(record: GenerationRecord, population: list[Individual]) -> None:
        record.method_frequencies = method_frequencies(
            population, config.frequency_top_k, config.frequency_max_methods
        )

    engine.on_generation(record_frequencies)
    result = engine.run()
    t_evolution = time.perf_counter()

    best = result.best
    best_doc = {"individual": best.to_dict(), "pipeline": None, "cv_fitness": best.fitness}
    test_metrics: dict = {}
    spec = None
    if best.fitness == WORST_FITNESS or best.phenotype is None:
        logger.warning("No pipeline could be evaluated; skipping the test evaluation")
        test_metrics = {"error": "no valid pipeline found"}
    else:
        spec = compile_phenotype(best.phenotype, registry)
        best_doc["pipeline"] = spec.to_dict()
        try:
            test_metrics = final_evaluation(spec, train, test, registry, seed)
        except ComponentFailure as e:
            logger.warning("Final fit of the best pipeline failed: %s", e)
            test_metrics = {"error": str(e)}
    t_final = time.perf_counter()

    config_echo = {k: v for k, v in config.to_dict().items() if k not in EXECUTION_KEYS}
    report = RunReport(
        config=config_echo,
        master_seed=config.seed,
        grammar_source=grammar_source,
        dataset=dataset.describe(),
        outer_split={"train": train_rows.tolist(), "test": test_rows.tolist()},
        inner_folds={**plan.to_dict(), "rows": train_rows.tolist()},
        generations=result.records,
        best=best_doc,
        test_metrics=test_metrics,
        stopped_early=result.stopped_early,
        execution={
            "out": config.out,
            "workers": config.workers,
            "started_at": started_at,
            "timings": {
                "evolution_secs": t_evolution - t0,
                "final_fit_secs": t_final - t_evolution,
                "total_secs": time.perf_counter() - t0,
            },
        },
    )
    if "macro_f" in test_metrics:
        logger.info("Best pipeline: %s (cv %.4f, test %.4f)",
                    best.phenotype, best.fitness, test_metrics["macro_f"])

    if write_files:
        save_report(report, os.path.join(config.out, REPORT_FILE))
        write_generations_csv(result.records, os.path.join(config.out, GENERATIONS_FILE))
        if spec is not None:
            write_best_pipeline(config.out, spec, best.phenotype.text, best.fitness,
                                test_metrics.get("macro_f"))
    return report


@dataclass
class ReplayResult:
    spec: PipelineSpec
    phenotype: Phenotype
    test_metrics: dict
    stored_macro_f: Optional[float]

    @property
    def macro_f_matches(self) -> bool:
        return self.stored_macro_f is not None and self.test_metrics.get("macro_f") == self.stored_macro_f


def _first_divergence(stored: Sequence[str], replayed: Sequence[str]) -> int:
    for i, (a, b) in enumerate(zip(stored, replayed)):
        if a != b:
            return i
    return min(len(stored), len(replayed))


def replay(report_path: str, registry: Optional[ComponentRegistry] = None,
           grammar_path: Optional[str] = None) -> ReplayResult:
    """
    Rebuild and re-evaluate the best pipeline of a report.

    The stored genotype is mapped again under the stored grammar (or
    `grammar_path`) and must give the stored phenotype; the pipeline is then
    retrained on the stored train rows and scored on the stored test rows.

    Raises:
        ReplayMismatchError: the genotype does not map, or maps to another phenotype
        ReportFormatError: the report cannot be read
    """
    report = load_report(report_path)
    config = RunConfig.from_dict(report.config)
    registry = _registry_for(config, registry)
    grammar: Grammar = load_grammar(grammar_path) if grammar_path else parse_grammar(report.grammar_source)

    individual = report.best_individual
    if individual.phenotype is None:
        raise ReplayMismatchError("report holds no valid best pipeline")
    try:
        phenotype, _ = map_genotype(grammar, individual.genotype, config.max_depth)
    except MappingError as e:
        raise ReplayMismatchError(f"stored genotype does not map under the grammar: {e}") from None

    stored, replayed = individual.phenotype.tokens, phenotype.tokens
    if stored != replayed:
        i = _first_divergence(stored, replayed)
        expected = stored[i] if i < len(stored) else "<end>"
        found = replayed[i] if i < len(replayed) else "<end>"
        raise ReplayMismatchError(
            f"phenotype diverges at token {i}: stored {expected!r}, replayed {found!r}"
        )

    spec = compile_phenotype(phenotype, registry)
    dataset = load_csv(config.dataset, config.label, config.missing_token)
    train = dataset.subset(report.outer_split["train"])
    test = dataset.subset(report.outer_split["test"])
    metrics = final_evaluation(spec, train, test, registry, model_seed(report.master_seed))

    result = ReplayResult(spec, phenotype, metrics, report.test_metrics.get("macro_f"))
    if not result.macro_f_matches:
        logger.warning("Replayed test macro-F %s differs from stored %s",
                       metrics.get("macro_f"), result.stored_macro_f)
    return result


def aggregate_reports(report_paths: Sequence[str], out_csv: str, max_methods: int = 0) -> int:
    """
    Write cross-run method frequencies of several reports.

    Returns:
        Number of generations written
    """
    runs = []
    for path in report_paths:
        try:
            runs.append(load_report(path).generations)
        except DsgeAutoMLError as e:
            logger.warning("Skipping %s: %s", path, e)
    write_aggregate_csv(runs, out_csv, max_methods)
    return max((len(r) for r in runs), default=0)
