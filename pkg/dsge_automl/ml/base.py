"""
Base classes for pipeline components.

Transformers implement fit/transform, classifiers fit/predict. Every
component checks its input: only components with `accepts_missing` may see
NaN, and no component accepts infinities.
"""

from typing import ClassVar, Optional

import numpy as np

from dsge_automl.core.cancel import CancelToken
from dsge_automl.core.errors import ComponentFailure


class Component:
    """Common input checks."""
    component_id: ClassVar[str] = ""
    accepts_missing: ClassVar[bool] = False
    uses_seed: ClassVar[bool] = False

    def _check_input(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ComponentFailure(f"{self.component_id}: expected a matrix, got shape {X.shape}")
        if X.shape[1] == 0:
            raise ComponentFailure(f"{self.component_id}: no features left")
        if np.isinf(X).any():
            raise ComponentFailure(f"{self.component_id}: input contains infinite values")
        if not self.accepts_missing and np.isnan(X).any():
            raise ComponentFailure(f"{self.component_id}: input contains missing values")
        return X


class Transformer(Component):
    def fit(self, X: np.ndarray, y: np.ndarray, cancel: Optional[CancelToken] = None) -> "Transformer":
        raise NotImplementedError

    def transform(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def fit_transform(self, X: np.ndarray, y: np.ndarray,
                      cancel: Optional[CancelToken] = None) -> np.ndarray:
        return self.fit(X, y, cancel).transform(X)


class Classifier(Component):
    classes_: np.ndarray

    def fit(self, X: np.ndarray, y: np.ndarray, cancel: Optional[CancelToken] = None) -> "Classifier":
        raise NotImplementedError

    def predict(self, X: np.ndarray, cancel: Optional[CancelToken] = None) -> np.ndarray:
        raise NotImplementedError

    def _encode_labels(self, y: np.ndarray) -> np.ndarray:
        """Store the training classes and return labels as positions in them."""
        y = np.asarray(y, dtype=np.int64)
        if y.size == 0:
            raise ComponentFailure(f"{self.component_id}: empty training set")
        self.classes_, positions = np.unique(y, return_inverse=True)
        return positions.reshape(-1)
