"""
Dataset model and CSV ingestion.

Features are a float64 matrix with NaN marking missing cells; labels are
class indices into `class_names`.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from dsge_automl.core.errors import DatasetError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Dataset:
    """A labelled numeric dataset."""
    features: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]
    feature_names: tuple[str, ...]

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2:
            raise DatasetError(f"features must be a matrix, got shape {features.shape}")
        if labels.shape != (features.shape[0],):
            raise DatasetError(
                f"{labels.shape[0] if labels.ndim else 0} labels for {features.shape[0]} rows"
            )
        if len(self.feature_names) != features.shape[1]:
            raise DatasetError(
                f"{len(self.feature_names)} feature names for {features.shape[1]} columns"
            )
        if labels.size and (labels.min() < 0 or labels.max() >= len(self.class_names)):
            raise DatasetError("label index outside the class list")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n_instances(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def has_missing(self) -> bool:
        return bool(np.isnan(self.features).any())

    def subset(self, indices) -> "Dataset":
        """Rows at `indices`, keeping the full class and feature lists."""
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[indices], self.labels[indices],
                       self.class_names, self.feature_names)

    def describe(self) -> dict:
        return {
            "n_instances": self.n_instances,
            "n_features": self.n_features,
            "n_classes": self.n_classes,
            "class_names": list(self.class_names),
            "missing": self.has_missing,
        }


def load_csv(path: Union[str, Path], label_column: str, missing_token: str = "?") -> Dataset:
    """
    Load a CSV file with a header row.

    Numeric columns are kept as reals. Any other column is one-hot encoded
    with categories in lexicographic order (`column=value`). Cells equal to
    `missing_token` (or empty) become NaN. Class names are the sorted label
    values.

    Raises:
        DatasetError: missing label column, empty file, missing labels or a
            single class
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DatasetError(f"{path}: empty dataset") from None

    if label_column not in frame.columns:
        raise DatasetError(f"{path}: label column {label_column!r} not found")
    if frame.empty:
        raise DatasetError(f"{path}: empty dataset")
    frame = frame.apply(lambda col: col.str.strip())

    raw_labels = frame[label_column]
    if ((raw_labels == missing_token) | (raw_labels == "")).any():
        raise DatasetError(f"{path}: label column contains missing values")
    class_names = sorted(raw_labels.unique())
    if len(class_names) < 2:
        raise DatasetError(f"{path}: dataset has a single class {class_names}")
    labels = pd.Categorical(raw_labels, categories=class_names).codes.astype(np.int64)

    columns: list[np.ndarray] = []
    names: list[str] = []
    for name in frame.columns:
        if name == label_column:
            continue
        cells = frame[name]
        missing = ((cells == missing_token) | (cells == "")).to_numpy()
        numeric = pd.to_numeric(cells.where(~missing), errors="coerce").to_numpy(dtype=np.float64)
        if not np.isnan(numeric[~missing]).any():
            columns.append(numeric)
            names.append(name)
            continue
        for category in sorted(cells[~missing].unique()):
            column = (cells == category).to_numpy(dtype=np.float64)
            column[missing] = np.nan
            columns.append(column)
            names.append(f"{name}={category}")

    features = np.column_stack(columns) if columns else np.empty((len(frame), 0))
    dataset = Dataset(features, labels, tuple(class_names), tuple(names))
    logger.info("Loaded %s: %d instances, %d features, %d classes%s",
                path, dataset.n_instances, dataset.n_features, dataset.n_classes,
                " (with missing values)" if dataset.has_missing else "")
    return dataset


def make_blobs(
    n_instances: int = 300,
    n_informative: int = 3,
    n_noise: int = 7,
    n_classes: int = 2,
    separation: float = 1.5,
    seed: int = 0,
) -> Dataset:
    """
    Synthetic Gaussian blobs with informative and pure-noise features.

    Class centres sit on hypercube corners at +/- `separation` along the
    informative axes; noise features are standard normal.
    """
    bits = max(1, int(np.ceil(np.log2(n_classes))))
    if n_informative < bits:
        raise ValueError("not enough informative features to separate the classes")
    rng = np.random.default_rng(seed)

    labels = np.arange(n_instances) % n_classes
    rng.shuffle(labels)
    centres = np.array([
        [separation if (c >> (j % bits)) & 1 else -separation for j in range(n_informative)]
        for c in range(n_classes)
    ])
    informative = centres[labels] + rng.standard_normal((n_instances, n_informative))
    noise = rng.standard_normal((n_instances, n_noise))
    features = np.hstack([informative, noise])

    names = [f"informative_{j}" for j in range(n_informative)] + [f"noise_{j}" for j in range(n_noise)]
    return Dataset(features, labels, tuple(f"class_{c}" for c in range(n_classes)), tuple(names))


def save_csv(dataset: Dataset, path: Union[str, Path], label_column: str = "class",
             missing_token: str = "?") -> None:
    """Write a dataset so that load_csv reads it back (label column last)."""
    frame = pd.DataFrame(dataset.features, columns=list(dataset.feature_names))
    frame[label_column] = [dataset.class_names[i] for i in dataset.labels]
    frame.to_csv(path, index=False, na_rep=missing_token, float_format="%.17g")
