"""
Generational evolutionary loop over DSGE genotypes.

- Tournament selection, elitism, crossover then per-codon mutation
- Fitness memoized on phenotype text for the whole run
- Every evaluation runs under a wall-clock budget
- Stops after `max_generations` or when the best fitness stalls

Every offspring slot draws from its own stream seeded from
(master_seed, generation, slot), so a run does not depend on the order or
parallelism of evaluations.
"""

import logging
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from dsge_automl.core.cancel import CancelToken
from dsge_automl.core.dsge import (
    DEFAULT_MAX_DEPTH,
    Genotype,
    Phenotype,
    crossover,
    map_genotype,
    mutate,
    random_genotype,
)
from dsge_automl.core.errors import (
    ConfigError,
    EvaluationTimeout,
    MappingError,
    PipelineCompileError,
)
from dsge_automl.core.grammar import Grammar

logger = logging.getLogger(__name__)

# Fitness of every individual whose evaluation failed; below any F-measure
WORST_FITNESS = -1.0

# Smallest increase of the best fitness that counts as improvement
IMPROVEMENT_EPS = 1e-12

# Evaluator contract: fitness in [0, 1]; must poll the token while working
Evaluator = Callable[[Phenotype, CancelToken], float]


class EvalStatus(Enum):
    OK = "ok"
    TIMEOUT = "timeout"
    RESOURCE_FAILURE = "resource_failure"
    COMPILE_FAILURE = "compile_failure"
    DEPTH_FAILURE = "depth_failure"


def derive_seed(master_seed: int, *keys: int) -> int:
    """Independent 64-bit seed for a (master_seed, key, ...) tuple."""
    entropy = [master_seed & 0xFFFF_FFFF_FFFF_FFFF] + [k & 0xFFFF_FFFF_FFFF_FFFF for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0])


@dataclass
class EvolutionConfig:
    population_size: int = 100
    max_generations: int = 100
    tournament_size: int = 2
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1     # per codon
    elite_count: int = 5
    stall_generations: int = 5
    eval_time_budget: float = 300.0  # seconds, wall clock
    master_seed: int = 0
    max_depth: int = DEFAULT_MAX_DEPTH
    workers: int = 1

    def validate(self) -> None:
        """
        Raises:
            ConfigError: describing the first violated constraint
        """
        if self.population_size < 1:
            raise ConfigError("population_size must be at least 1")
        if self.max_generations < 1:
            raise ConfigError("max_generations must be at least 1")
        if self.tournament_size < 1:
            raise ConfigError("tournament_size must be at least 1")
        if not 0 <= self.elite_count < self.population_size:
            raise ConfigError(
                f"elite_count must be in [0, population_size), got {self.elite_count}"
            )
        for name in ("crossover_rate", "mutation_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {value}")
        if self.stall_generations < 1:
            raise ConfigError("stall_generations must be at least 1")
        if not self.eval_time_budget > 0:
            raise ConfigError("eval_time_budget must be positive")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Individual:
    genotype: Genotype
    phenotype: Optional[Phenotype]  # None when mapping failed
    fitness: Optional[float] = None
    eval_status: Optional[EvalStatus] = None

    @property
    def evaluated(self) -> bool:
        return self.fitness is not None

    def to_dict(self) -> dict:
        return {
            "genotype": self.genotype.to_dict(),
            "phenotype": self.phenotype.text if self.phenotype is not None else None,
            "fitness": self.fitness,
            "eval_status": self.eval_status.value if self.eval_status else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Individual":
        phenotype = data.get("phenotype")
        status = data.get("eval_status")
        return cls(
            genotype=Genotype.from_dict(data["genotype"]),
            phenotype=Phenotype.from_text(phenotype) if phenotype is not None else None,
            fitness=data.get("fitness"),
            eval_status=EvalStatus(status) if status else None,
        )


@dataclass
class GenerationRecord:
    """Statistics of one evaluated generation."""
    generation: int
    best_fitness: float
    mean_fitness: float
    worst_fitness: float
    status_counts: dict[str, int]
    evaluations: int               # fresh evaluations this generation
    cache_hits: int
    best_phenotype: str
    fitnesses: list[float] = field(default_factory=list)
    method_frequencies: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "GenerationRecord":
        return cls(**data)


@dataclass
class EvolutionResult:
    best: Individual
    records: list[GenerationRecord]
    stopped_early: bool
    cache_size: int

    @property
    def generations_run(self) -> int:
        return len(self.records)


def evaluate_with_budget(
    evaluator: Evaluator,
    pheno: Phenotype,
    budget: float,
) -> tuple[float, EvalStatus]:
    """
    Run one evaluation under a wall-clock budget.

    The evaluator receives a CancelToken that expires after `budget` seconds.
    No exception escapes: every failure becomes WORST_FITNESS with a status.

    Returns:
        (fitness, status)
    """
    if not budget > 0:
        raise ValueError(f"budget must be positive, got {budget}")
    cancel = CancelToken(budget)
    try:
        score = evaluator(pheno, cancel)
    except EvaluationTimeout:
        return WORST_FITNESS, EvalStatus.TIMEOUT
    except PipelineCompileError as e:
        logger.debug("Compile failure for %s: %s", pheno, e)
        return WORST_FITNESS, EvalStatus.COMPILE_FAILURE
    except MappingError as e:
        logger.debug("Depth failure for %s: %s", pheno, e)
        return WORST_FITNESS, EvalStatus.DEPTH_FAILURE
    except Exception as e:
        logger.debug("Resource failure for %s: %s: %s", pheno, type(e).__name__, e)
        return WORST_FITNESS, EvalStatus.RESOURCE_FAILURE

    if cancel.cancelled:
        return WORST_FITNESS, EvalStatus.TIMEOUT
    try:
        score = float(score)
    except (TypeError, ValueError):
        return WORST_FITNESS, EvalStatus.RESOURCE_FAILURE
    if not math.isfinite(score) or not 0.0 <= score <= 1.0:
        logger.debug("Evaluator returned %r for %s", score, pheno)
        return WORST_FITNESS, EvalStatus.RESOURCE_FAILURE
    return score, EvalStatus.OK


class EvolutionEngine:
    """
    Runs one evolutionary search.

    Observers registered with on_generation are called after every
    generation with the record and the evaluated population.
    """

    def __init__(self, grammar: Grammar, config: EvolutionConfig, evaluator: Evaluator):
        config.validate()
        self.grammar = grammar
        self.config = config
        self.evaluator = evaluator
        self._cache: dict[str, tuple[float, EvalStatus]] = {}
        self._callbacks: list[Callable[[GenerationRecord, list[Individual]], None]] = []

    def on_generation(self, callback: Callable[[GenerationRecord, list[Individual]], None]):
        """Register a callback for finished generations."""
        self._callbacks.append(callback)

    def _notify(self, record: GenerationRecord, population: list[Individual]):
        for callback in self._callbacks:
            callback(record, population)

    # =========================================================================
    # Individuals
    # =========================================================================

    def _slot_rng(self, generation: int, slot: int) -> random.Random:
        return random.Random(derive_seed(self.config.master_seed, generation, slot))

    def _individual(self, genotype: Genotype) -> Individual:
        try:
            phenotype, genotype = map_genotype(self.grammar, genotype, self.config.max_depth)
        except MappingError as e:
            logger.debug("Mapping failed: %s", e)
            return Individual(genotype, None, WORST_FITNESS, EvalStatus.DEPTH_FAILURE)
        return Individual(genotype, phenotype)

    def _initial_population(self) -> list[Individual]:
        population = []
        for slot in range(self.config.population_size):
            rng = self._slot_rng(0, slot)
            try:
                genotype = random_genotype(self.grammar, rng, self.config.max_depth)
            except MappingError as e:
                logger.debug("Initial sample failed: %s", e)
                population.append(Individual(Genotype(), None, WORST_FITNESS, EvalStatus.DEPTH_FAILURE))
                continue
            population.append(self._individual(genotype))
        return population

    def _tournament(self, population: list[Individual], rng: random.Random) -> Individual:
        size = min(self.config.tournament_size, len(population))
        contestants = rng.sample(population, size)
        top = max(c.fitness for c in contestants)
        return rng.choice([c for c in contestants if c.fitness == top])

    def _offspring(self, population: list[Individual], generation: int, slot: int) -> Individual:
        cfg = self.config
        rng = self._slot_rng(generation, slot)
        parent = self._tournament(population, rng)
        genotype = parent.genotype
        try:
            if rng.random() < cfg.crossover_rate:
                other = self._tournament(population, rng)
                genotype = crossover(self.grammar, genotype, other.genotype, rng, cfg.max_depth)[0]
            genotype = mutate(self.grammar, genotype, rng, cfg.mutation_rate, cfg.max_depth)
        except MappingError as e:
            logger.debug("Variation failed in slot %d: %s", slot, e)
            return Individual(genotype, None, WORST_FITNESS, EvalStatus.DEPTH_FAILURE)
        return self._individual(genotype)

    def _next_population(self, population: list[Individual], generation: int) -> list[Individual]:
        ranked = sorted(range(len(population)), key=lambda i: (-population[i].fitness, i))
        elites = [population[i] for i in ranked[: self.config.elite_count]]
        children = [
            self._offspring(population, generation, slot)
            for slot in range(len(elites), self.config.population_size)
        ]
        return elites + children

    # =========================================================================
    # Evaluation
    # =========================================================================

    def _evaluate(self, population: list[Individual], pool: Optional[ThreadPoolExecutor]) -> tuple[int, int]:
        """Fill in fitness for the population. Returns (fresh evaluations, cache hits)."""
        pending: list[str] = []
        phenotypes: dict[str, Phenotype] = {}
        hits = 0
        for ind in population:
            if ind.phenotype is None:
                continue
            text = ind.phenotype.text
            if text in self._cache:
                hits += 1
            elif text not in phenotypes:
                phenotypes[text] = ind.phenotype
                pending.append(text)

        budget = self.config.eval_time_budget

        def run(text: str) -> tuple[float, EvalStatus]:
            return evaluate_with_budget(self.evaluator, phenotypes[text], budget)

        if pool is None:
            results = [run(text) for text in pending]
        else:
            results = list(pool.map(run, pending))
        for text, result in zip(pending, results):
            self._cache[text] = result

        for ind in population:
            if ind.phenotype is not None:
                ind.fitness, ind.eval_status = self._cache[ind.phenotype.text]
        return len(pending), hits

    def _record(self, generation: int, population: list[Individual],
                evaluations: int, hits: int) -> GenerationRecord:
        fitnesses = [ind.fitness for ind in population]
        counts = {status.value: 0 for status in EvalStatus}
        for ind in population:
            counts[ind.eval_status.value] += 1
        best = max(range(len(population)), key=lambda i: (fitnesses[i], -i))
        phenotype = population[best].phenotype
        return GenerationRecord(
            generation=generation,
            best_fitness=max(fitnesses),
            mean_fitness=sum(fitnesses) / len(fitnesses),
            worst_fitness=min(fitnesses),
            status_counts=counts,
            evaluations=evaluations,
            cache_hits=hits,
            best_phenotype=phenotype.text if phenotype is not None else "",
            fitnesses=fitnesses,
        )

    # =========================================================================
    # Loop
    # =========================================================================

    def run(self) -> EvolutionResult:
        cfg = self.config
        records: list[GenerationRecord] = []
        best: Optional[Individual] = None
        stall = 0
        stopped_early = False

        pool = ThreadPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None
        try:
            population = self._initial_population()
            generation = 0
            while True:
                evaluations, hits = self._evaluate(population, pool)
                record = self._record(generation, population, evaluations, hits)
                records.append(record)

                leader = population[max(range(len(population)),
                                        key=lambda i: (population[i].fitness, -i))]
                if best is None or leader.fitness > best.fitness + IMPROVEMENT_EPS:
                    best = leader
                    stall = 0
                else:
                    stall += 1

                logger.info(
                    "Generation %d: best %.4f, mean %.4f, %d evaluated, %d cached",
                    generation, record.best_fitness, record.mean_fitness, evaluations, hits,
                )
                self._notify(record, population)

                if stall >= cfg.stall_generations:
                    stopped_early = generation + 1 < cfg.max_generations
                    if stopped_early:
                        logger.info("No improvement for %d generations, stopping", stall)
                    break
                if generation + 1 >= cfg.max_generations:
                    break
                generation += 1
                population = self._next_population(population, generation)
        finally:
            if pool is not None:
                pool.shutdown()

        return EvolutionResult(best=best, records=records, stopped_early=stopped_early,
                               cache_size=len(self._cache))


def evolve(grammar: Grammar, config: EvolutionConfig, evaluator: Evaluator) -> EvolutionResult:
    """Run a search with a fresh engine."""
    return EvolutionEngine(grammar, config, evaluator).run()
