"""
Run reports and method-frequency statistics.

Frequencies are computed per category (preprocessing, classifier) over the
best individuals of a generation. Each individual has weight 1, split evenly
across its preprocessors, so every category sums to 1. Special buckets:

- none: pipeline without preprocessors
- invalid: individual without a usable phenotype
- others: methods folded away by `max_methods`
"""

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from dsge_automl.core.components import Role
from dsge_automl.core.dsge import Phenotype
from dsge_automl.core.evolution import GenerationRecord, Individual

NONE_BUCKET = "none"
INVALID_BUCKET = "invalid"
OTHERS_BUCKET = "others"
_SPECIAL = (NONE_BUCKET, INVALID_BUCKET, OTHERS_BUCKET)

CATEGORIES = (Role.PREPROCESSING.value, Role.CLASSIFIER.value)


def pipeline_methods(pheno: Optional[Phenotype]) -> Optional[tuple[list[str], Optional[str]]]:
    """(preprocessor names, classifier name) read from component tokens; None if no phenotype."""
    if pheno is None:
        return None
    preprocessors: list[str] = []
    classifier = None
    for token in pheno.tokens:
        tag, _, name = token.partition(":")
        if tag == Role.PREPROCESSING.value:
            preprocessors.append(name)
        elif tag == Role.CLASSIFIER.value and classifier is None:
            classifier = name
    return preprocessors, classifier


def _fold_others(counts: dict[str, float], max_methods: int) -> dict[str, float]:
    methods = sorted((k for k in counts if k not in _SPECIAL), key=lambda k: (-counts[k], k))
    if max_methods <= 0 or len(methods) <= max_methods:
        return counts
    folded = {k: v for k, v in counts.items() if k in _SPECIAL or k in methods[:max_methods]}
    folded[OTHERS_BUCKET] = folded.get(OTHERS_BUCKET, 0.0) + math.fsum(
        counts[k] for k in methods[max_methods:]
    )
    return folded


def phenotype_frequencies(phenotypes: Sequence[Optional[Phenotype]], max_methods: int = 0) -> dict:
    """
    Fraction of pipelines using each method, per category.

    Args:
        phenotypes: Phenotypes to count (None counts as invalid)
        max_methods: Keep this many methods per category and fold the rest
            into `others` (0 keeps all)

    Returns:
        {"preprocessing": {name: fraction}, "classifier": {name: fraction}}
    """
    counts = {category: {} for category in CATEGORIES}
    pre, clf = counts[Role.PREPROCESSING.value], counts[Role.CLASSIFIER.value]
    for pheno in phenotypes:
        methods = pipeline_methods(pheno)
        if methods is None:
            pre[INVALID_BUCKET] = pre.get(INVALID_BUCKET, 0.0) + 1.0
            clf[INVALID_BUCKET] = clf.get(INVALID_BUCKET, 0.0) + 1.0
            continue
        preprocessors, classifier = methods
        if not preprocessors:
            pre[NONE_BUCKET] = pre.get(NONE_BUCKET, 0.0) + 1.0
        for name in preprocessors:
            pre[name] = pre.get(name, 0.0) + 1.0 / len(preprocessors)
        key = classifier if classifier is not None else INVALID_BUCKET
        clf[key] = clf.get(key, 0.0) + 1.0

    total = len(phenotypes)
    result = {}
    for category, table in counts.items():
        table = _fold_others(table, max_methods)
        result[category] = {k: table[k] / total for k in sorted(table)} if total else {}
    return result


def method_frequencies(population: Sequence[Individual], top_k: int, max_methods: int = 0) -> dict:
    """Method frequencies over the `top_k` fittest individuals (ties by position)."""
    ranked = sorted(range(len(population)), key=lambda i: (-population[i].fitness, i))
    chosen = [population[i].phenotype for i in ranked[: max(1, top_k)]]
    return phenotype_frequencies(chosen, max_methods)


def aggregate_best_frequencies(runs: Sequence[Sequence[GenerationRecord]], max_methods: int = 0) -> list[dict]:
    """
    Per-generation method frequencies of the best individual across runs.

    Runs shorter than the longest one are padded by repeating their last
    generation.

    Returns:
        One {"generation": g, "preprocessing": {...}, "classifier": {...}} per generation
    """
    runs = [list(r) for r in runs if r]
    if not runs:
        return []
    length = max(len(r) for r in runs)
    rows = []
    for g in range(length):
        phenotypes = []
        for records in runs:
            text = records[min(g, len(records) - 1)].best_phenotype
            phenotypes.append(Phenotype.from_text(text) if text else None)
        rows.append({"generation": g, **phenotype_frequencies(phenotypes, max_methods)})
    return rows


@dataclass
class RunReport:
    """Everything a run produces; `execution` holds the fields that vary between identical runs."""
    config: dict
    master_seed: int
    grammar_source: str
    dataset: dict
    outer_split: dict              # {"train": [...], "test": [...]}
    inner_folds: dict              # FoldPlan over the outer train rows
    generations: list[GenerationRecord]
    best: dict                     # individual, pipeline and cv fitness
    test_metrics: dict
    stopped_early: bool = False
    execution: dict = field(default_factory=dict)

    @property
    def best_individual(self) -> Individual:
        return Individual.from_dict(self.best["individual"])

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "master_seed": self.master_seed,
            "grammar_source": self.grammar_source,
            "dataset": self.dataset,
            "outer_split": self.outer_split,
            "inner_folds": self.inner_folds,
            "generations": [r.to_dict() for r in self.generations],
            "best": self.best,
            "test_metrics": self.test_metrics,
            "stopped_early": self.stopped_early,
            "execution": self.execution,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        return cls(
            config=data["config"],
            master_seed=data["master_seed"],
            grammar_source=data["grammar_source"],
            dataset=data["dataset"],
            outer_split=data["outer_split"],
            inner_folds=data["inner_folds"],
            generations=[GenerationRecord.from_dict(r) for r in data["generations"]],
            best=data["best"],
            test_metrics=data["test_metrics"],
            stopped_early=data.get("stopped_early", False),
            execution=data.get("execution", {}),
        )


def frequencies_sum_to_one(table: dict, tolerance: float = 1e-9) -> bool:
    return all(
        abs(math.fsum(table[category].values()) - 1.0) <= tolerance for category in CATEGORIES
    )


def generation_rows(records: Iterable[GenerationRecord]) -> list[dict]:
    """Flat per-generation rows for tabular output."""
    rows = []
    for r in records:
        row = {
            "generation": r.generation,
            "best_fitness": r.best_fitness,
            "mean_fitness": r.mean_fitness,
            "worst_fitness": r.worst_fitness,
            "evaluations": r.evaluations,
            "cache_hits": r.cache_hits,
        }
        for status, count in r.status_counts.items():
            row[f"n_{status}"] = count
        for category, table in r.method_frequencies.items():
            for name, fraction in table.items():
                row[f"{category}:{name}"] = fraction
        row["best_phenotype"] = r.best_phenotype
        rows.append(row)
    return rows
