"""
Preprocessing components: imputation, scaling and feature selection.
"""

import math
from typing import Optional

import numpy as np

from dsge_automl.core.cancel import CancelToken, poll
from dsge_automl.core.errors import ComponentFailure
from dsge_automl.ml.base import Transformer


class Imputer(Transformer):
    """Replace NaN cells with a per-column statistic (all-NaN columns get 0)."""
    component_id = "imputer"
    accepts_missing = True

    def __init__(self, strategy: str = "mean"):
        if strategy not in ("mean", "median", "most_frequent"):
            raise ComponentFailure(f"imputer: unknown strategy {strategy!r}")
        self.strategy = strategy

    def fit(self, X, y=None, cancel: Optional[CancelToken] = None):
        X = self._check_input(X)
        stats = np.zeros(X.shape[1])
        for j in range(X.shape[1]):
            column = X[:, j]
            present = column[~np.isnan(column)]
            if present.size == 0:
                continue
            if self.strategy == "mean":
                stats[j] = present.mean()
            elif self.strategy == "median":
                stats[j] = np.median(present)
            else:
                values, counts = np.unique(present, return_counts=True)
                stats[j] = values[np.argmax(counts)]
        self.statistics_ = stats
        return self

    def transform(self, X):
        X = self._check_input(X)
        return np.where(np.isnan(X), self.statistics_, X)


class MinMaxScaler(Transformer):
    """Scale each column to [0, 1]; constant columns map to 0."""
    component_id = "min_max_scaler"

    def fit(self, X, y=None, cancel: Optional[CancelToken] = None):
        X = self._check_input(X)
        self.min_ = X.min(axis=0)
        span = X.max(axis=0) - self.min_
        self.scale_ = np.where(span > 0, span, 1.0)
        return self

    def transform(self, X):
        X = self._check_input(X)
        return (X - self.min_) / self.scale_


class StandardScaler(Transformer):
    """Zero mean, unit variance per column; constant columns map to 0."""
    component_id = "standard_scaler"

    def fit(self, X, y=None, cancel: Optional[CancelToken] = None):
        X = self._check_input(X)
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale_ = np.where(std > 0, std, 1.0)
        return self

    def transform(self, X):
        X = self._check_input(X)
        return (X - self.mean_) / self.scale_


class MaxAbsScaler(Transformer):
    """Divide each column by its largest absolute value."""
    component_id = "max_abs_scaler"

    def fit(self, X, y=None, cancel: Optional[CancelToken] = None):
        X = self._check_input(X)
        peak = np.abs(X).max(axis=0)
        self.scale_ = np.where(peak > 0, peak, 1.0)
        return self

    def transform(self, X):
        X = self._check_input(X)
        return X / self.scale_


class RobustScaler(Transformer):
    """Centre on the median and scale by the interquartile range."""
    component_id = "robust_scaler"

    def fit(self, X, y=None, cancel: Optional[CancelToken] = None):
        X = self._check_input(X)
        self.center_ = np.median(X, axis=0)
        q75, q25 = np.percentile(X, [75, 25], axis=0)
        iqr = q75 - q25
        self.scale_ = np.where(iqr > 0, iqr, 1.0)
        return self

    def transform(self, X):
        X = self._check_input(X)
        return (X - self.center_) / self.scale_


class Normalizer(Transformer):
    """Scale each row to unit norm (rows of zeros are left alone)."""
    component_id = "normalizer"

    def __init__(self, norm: str = "l2"):
        if norm not in ("l1", "l2", "max"):
            raise ComponentFailure(f"normalizer: unknown norm {norm!r}")
        self.norm = norm

    def fit(self, X, y=None, cancel: Optional[CancelToken] = None):
        self._check_input(X)
        return self

    def transform(self, X):
        X = self._check_input(X)
        if self.norm == "l1":
            norms = np.abs(X).sum(axis=1)
        elif self.norm == "l2":
            norms = np.sqrt((X * X).sum(axis=1))
        else:
            norms = np.abs(X).max(axis=1)
        norms = np.where(norms > 0, norms, 1.0)
        return X / norms[:, None]


class Binarizer(Transformer):
    """1 where a value exceeds the threshold, else 0."""
    component_id = "binarizer"

    def __init__(self, threshold: float = 0.0):
        self.threshold = threshold

    def fit(self, X, y=None, cancel: Optional[CancelToken] = None):
        self._check_input(X)
        return self

    def transform(self, X):
        X = self._check_input(X)
        return (X > self.threshold).astype(np.float64)


class VarianceThreshold(Transformer):
    """Drop columns whose training variance is not above the threshold."""
    component_id = "variance_threshold"

    def __init__(self, threshold: float = 0.0):
        if threshold < 0:
            raise ComponentFailure("variance_threshold: threshold must be >= 0")
        self.threshold = threshold

    def fit(self, X, y=None, cancel: Optional[CancelToken] = None):
        X = self._check_input(X)
        self.variances_ = X.var(axis=0)
        self.support_ = np.flatnonzero(self.variances_ > self.threshold)
        if self.support_.size == 0:
            raise ComponentFailure(
                f"variance_threshold: no feature has variance above {self.threshold}"
            )
        return self

    def transform(self, X):
        X = self._check_input(X)
        return X[:, self.support_]


def anova_f_scores(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """
    One-way ANOVA F statistic of every column against the labels.

    Columns with no within-class spread score +inf when the class means
    differ and 0 otherwise; with fewer than two classes every score is 0.
    """
    classes = np.unique(y)
    n, k = len(y), len(classes)
    if k < 2 or n <= k:
        return np.zeros(X.shape[1])

    overall = X.mean(axis=0)
    between = np.zeros(X.shape[1])
    within = np.zeros(X.shape[1])
    for cls in classes:
        rows = X[y == cls]
        mean = rows.mean(axis=0)
        between += len(rows) * (mean - overall) ** 2
        within += ((rows - mean) ** 2).sum(axis=0)

    ms_between = between / (k - 1)
    ms_within = within / (n - k)
    scores = np.zeros(X.shape[1])
    spread = ms_within > 0
    scores[spread] = ms_between[spread] / ms_within[spread]
    scores[~spread & (ms_between > 0)] = np.inf
    return scores


class SelectPercentile(Transformer):
    """Keep the top `percentile` percent of columns by ANOVA F (at least one)."""
    component_id = "select_percentile"

    def __init__(self, percentile: int = 10):
        if not 1 <= percentile <= 100:
            raise ComponentFailure("select_percentile: percentile must be in [1, 100]")
        self.percentile = percentile

    def fit(self, X, y, cancel: Optional[CancelToken] = None):
        X = self._check_input(X)
        poll(cancel)
        self.scores_ = anova_f_scores(X, np.asarray(y))
        n_keep = max(1, math.floor(X.shape[1] * self.percentile / 100))
        ranked = np.argsort(-self.scores_, kind="stable")
        self.support_ = np.sort(ranked[:n_keep])
        return self

    def transform(self, X):
        X = self._check_input(X)
        return X[:, self.support_]
