"""
Stratified partitioning and cross-validated fitness.
"""

import logging
from dataclasses import dataclass
from typing import Iterator, Optional, Union

import numpy as np

from dsge_automl.core.cancel import CancelToken, poll
from dsge_automl.core.components import ComponentRegistry
from dsge_automl.core.errors import DatasetError
from dsge_automl.core.pipeline import PipelineSpec, fit_predict
from dsge_automl.ml.dataset import Dataset
from dsge_automl.ml.metrics import f_measure

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FoldPlan:
    """Fold index in [0, k) for every row."""
    k: int
    assignments: np.ndarray

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def splits(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        """Yield (train, test) row indices for every fold."""
        for fold in range(self.k):
            yield self.train_indices(fold), self.test_indices(fold)

    def to_dict(self) -> dict:
        return {"k": self.k, "assignments": self.assignments.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "FoldPlan":
        return cls(data["k"], np.asarray(data["assignments"], dtype=np.int64))


def _labels_of(data: Union[Dataset, np.ndarray]) -> np.ndarray:
    return data.labels if isinstance(data, Dataset) else np.asarray(data, dtype=np.int64)


def stratified_folds(data: Union[Dataset, np.ndarray], k: int, rng: np.random.Generator) -> FoldPlan:
    """
    Assign rows to k stratified folds.

    Rows of each class are shuffled and dealt round-robin; the deal carries
    on across classes so fold sizes also differ by at most one.

    Args:
        data: Dataset (or its label vector)
        k: Number of folds, 2 <= k <= n
        rng: numpy Generator used for the shuffles

    Raises:
        DatasetError: if k < 2 or k exceeds the number of rows
    """
    labels = _labels_of(data)
    n = len(labels)
    if k < 2:
        raise DatasetError(f"need at least 2 folds, got {k}")
    if k > n:
        raise DatasetError(f"cannot split {n} rows into {k} folds")

    assignments = np.empty(n, dtype=np.int64)
    offset = 0
    for cls in np.unique(labels):
        rows = rng.permutation(np.flatnonzero(labels == cls))
        assignments[rows] = (offset + np.arange(len(rows))) % k
        offset += len(rows)
    return FoldPlan(k, assignments)


def stratified_holdout(
    data: Union[Dataset, np.ndarray],
    fraction: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Split rows into (train, test) keeping class proportions.

    Every class with at least two rows keeps one row on each side.
    """
    if not 0.0 < fraction < 1.0:
        raise DatasetError(f"holdout fraction must be in (0, 1), got {fraction}")
    labels = _labels_of(data)
    test: list[np.ndarray] = []
    for cls in np.unique(labels):
        rows = rng.permutation(np.flatnonzero(labels == cls))
        n_test = int(round(fraction * len(rows)))
        if len(rows) >= 2:
            n_test = min(max(n_test, 1), len(rows) - 1)
        else:
            n_test = 0
        test.append(rows[:n_test])
    test_rows = np.sort(np.concatenate(test))
    train_rows = np.setdiff1d(np.arange(len(labels)), test_rows)
    if not len(test_rows):
        raise DatasetError("holdout produced an empty test set")
    return train_rows, test_rows


def cv_fitness(
    spec: PipelineSpec,
    dataset: Dataset,
    folds: Union[int, FoldPlan],
    registry: ComponentRegistry,
    rng: Optional[np.random.Generator] = None,
    cancel: Optional[CancelToken] = None,
    seed: int = 0,
) -> float:
    """
    Mean macro F-measure of a pipeline over cross-validation folds.

    Args:
        spec: Compiled pipeline
        dataset: Data to cross-validate on
        folds: A fixed FoldPlan, or k to build a stratified plan from `rng`
        registry: Component registry used to build the pipeline
        rng: Generator for building the plan when `folds` is an int
        cancel: Polled between folds (and inside components)
        seed: Seed handed to stochastic components

    Raises:
        ComponentFailure: if any fold fails to fit
        EvaluationTimeout: if `cancel` fires
    """
    if isinstance(folds, FoldPlan):
        plan = folds
    else:
        plan = stratified_folds(dataset, folds, rng if rng is not None else np.random.default_rng(seed))

    scores = []
    for train_rows, test_rows in plan.splits():
        poll(cancel)
        train, test = dataset.subset(train_rows), dataset.subset(test_rows)
        predictions = fit_predict(spec, train, test, registry, cancel=cancel, seed=seed)
        scores.append(f_measure(test.labels, predictions, dataset.n_classes))
    return sum(scores) / len(scores)
