"""
Run configuration: defaults, JSON config files and command-line overrides.

Precedence is dataclass default < config file < command-line flag. Every
key has a flag of the same name in dash-case (budget_secs -> --budget-secs).
"""

import argparse
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Optional

from dsge_automl.core.errors import ConfigError
from dsge_automl.core.evolution import EvolutionConfig

logger = logging.getLogger(__name__)

DEFAULT_OUTER_HOLDOUT = 0.25


def _key(help_text: str, **extra) -> dict:
    return {"help": help_text, **extra}


@dataclass
class RunConfig:
    grammar: str = field(default="", metadata=_key("grammar file (.bnf)"))
    dataset: str = field(default="", metadata=_key("CSV dataset with a header row"))
    label: str = field(default="", metadata=_key("name of the label column"))
    missing_token: str = field(default="?", metadata=_key("cell value meaning 'missing'"))
    seed: int = field(default=0, metadata=_key("master seed of the run"))
    out: str = field(default="out", metadata=_key("output directory"))
    population: int = field(default=100, metadata=_key("population size"))
    generations: int = field(default=100, metadata=_key("maximum number of generations"))
    tournament_size: int = field(default=2, metadata=_key("tournament size"))
    crossover_rate: float = field(default=0.9, metadata=_key("crossover probability"))
    mutation_rate: float = field(default=0.1, metadata=_key("per-codon mutation probability"))
    elite_count: int = field(default=5, metadata=_key("individuals copied unchanged"))
    stall_generations: int = field(default=5, metadata=_key("generations without improvement before stopping"))
    budget_secs: float = field(default=300.0, metadata=_key("wall-clock budget per evaluation"))
    max_depth: int = field(default=17, metadata=_key("maximum derivation depth"))
    inner_k: int = field(default=3, metadata=_key("folds of the inner cross-validation"))
    outer_holdout: Optional[float] = field(default=None, metadata=_key(
        f"fraction of rows held out for testing (default {DEFAULT_OUTER_HOLDOUT})"))
    outer_fold: Optional[str] = field(default=None, metadata=_key("test fold I of a K-fold outer plan, as I/K"))
    split_seed: Optional[int] = field(default=None, metadata=_key("seed of the outer split (default: seed)"))
    workers: int = field(default=1, metadata=_key("parallel evaluations"))
    frequency_top_k: int = field(default=10, metadata=_key("best individuals counted in method frequencies"))
    frequency_max_methods: int = field(default=0, metadata=_key(
        "methods kept per category before folding into 'others' (0 = all)"))
    component_library: Optional[str] = field(default=None, metadata=_key("component library directory"))

    def validate(self) -> None:
        """
        Raises:
            ConfigError: describing the first problem found
        """
        for name in ("grammar", "dataset", "label"):
            if not getattr(self, name):
                raise ConfigError(f"{name} is required")
        if self.outer_holdout is not None and self.outer_fold is not None:
            raise ConfigError("give either outer_holdout or outer_fold, not both")
        if self.outer_holdout is not None and not 0.0 < self.outer_holdout < 1.0:
            raise ConfigError(f"outer_holdout must be in (0, 1), got {self.outer_holdout}")
        if self.outer_fold is not None:
            self.outer_fold_index()
        if self.inner_k < 2:
            raise ConfigError("inner_k must be at least 2")
        if self.frequency_top_k < 1:
            raise ConfigError("frequency_top_k must be at least 1")
        if self.frequency_max_methods < 0:
            raise ConfigError("frequency_max_methods must be >= 0")
        self.evolution_config().validate()

    def outer_fold_index(self) -> Optional[tuple[int, int]]:
        """(I, K) of the outer fold, or None for a holdout split."""
        if self.outer_fold is None:
            return None
        try:
            index, k = (int(part) for part in self.outer_fold.split("/"))
        except ValueError:
            raise ConfigError(f"outer_fold must look like I/K, got {self.outer_fold!r}") from None
        if k < 2 or not 0 <= index < k:
            raise ConfigError(f"outer_fold needs K >= 2 and 0 <= I < K, got {self.outer_fold!r}")
        return index, k

    @property
    def holdout_fraction(self) -> float:
        return DEFAULT_OUTER_HOLDOUT if self.outer_holdout is None else self.outer_holdout

    @property
    def effective_split_seed(self) -> int:
        return self.seed if self.split_seed is None else self.split_seed

    def evolution_config(self) -> EvolutionConfig:
        return EvolutionConfig(
            population_size=self.population,
            max_generations=self.generations,
            tournament_size=self.tournament_size,
            crossover_rate=self.crossover_rate,
            mutation_rate=self.mutation_rate,
            elite_count=self.elite_count,
            stall_generations=self.stall_generations,
            eval_time_budget=self.budget_secs,
            master_seed=self.seed,
            max_depth=self.max_depth,
            workers=self.workers,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**{k: _coerce(cls, k, v) for k, v in data.items()})
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e)) from None


# Keys whose values are identical across otherwise identical runs
EXECUTION_KEYS = ("out", "workers")


def _field_type(cls, name: str) -> type:
    annotation = {f.name: f.type for f in fields(cls)}[name]
    for t in (int, float, str):
        if annotation in (t, t.__name__, Optional[t], f"Optional[{t.__name__}]"):
            return t
    return str


def _coerce(cls, name: str, value: Any) -> Any:
    if value is None:
        return None
    t = _field_type(cls, name)
    if t is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if t is int and isinstance(value, bool):
        raise ValueError(f"{name} expects an integer, got {value!r}")
    if t is int and isinstance(value, float) and value.is_integer():
        return int(value)
    if not isinstance(value, t):
        raise ValueError(f"{name} expects {t.__name__}, got {value!r}")
    return value


def load_config_file(path: str) -> dict:
    """
    Read a flat JSON config document.

    Relative paths inside the file are resolved against the file's directory.

    Raises:
        ConfigError: unreadable file or not a JSON object
    """
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    data = {k: v for k, v in data.items() if not k.startswith("_")}

    base = os.path.dirname(os.path.abspath(path))
    for key in ("grammar", "dataset", "component_library"):
        value = data.get(key)
        if isinstance(value, str) and value and not os.path.isabs(value):
            data[key] = os.path.normpath(os.path.join(base, value))
    return data


def add_config_arguments(parser: argparse.ArgumentParser) -> None:
    """Add one flag per RunConfig key; unset flags do not appear in the namespace."""
    for f in fields(RunConfig):
        parser.add_argument(
            "--" + f.name.replace("_", "-"),
            dest=f.name,
            type=_field_type(RunConfig, f.name),
            default=argparse.SUPPRESS,
            help=f.metadata.get("help"),
        )


def resolve_config(config_path: Optional[str], overrides: dict) -> RunConfig:
    """
    Merge a config file with command-line overrides and validate.

    Args:
        config_path: JSON config file, or None
        overrides: Keys given on the command line

    Raises:
        ConfigError: invalid file, keys or values
    """
    data = load_config_file(config_path) if config_path else {}
    # an outer split given on the command line replaces the file's
    if "outer_holdout" in overrides:
        data.pop("outer_fold", None)
    if "outer_fold" in overrides:
        data.pop("outer_holdout", None)
    data.update({k: v for k, v in overrides.items() if v is not None})
    config = RunConfig.from_dict(data)
    config.validate()
    logger.debug("Resolved config: %s", config.to_dict())
    return config
