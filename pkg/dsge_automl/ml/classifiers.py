"""
Classifiers implemented on numpy.

All predict class indices from the training label space. Ties between
classes go to the lowest class index; ties between neighbours at equal
distance go to the lower training row.
"""

import logging
from typing import Optional

import numpy as np

from dsge_automl.core.cancel import CancelToken, poll
from dsge_automl.core.errors import ComponentFailure
from dsge_automl.ml.base import Classifier

logger = logging.getLogger(__name__)

# Upper bound on the number of cells in a broadcast distance block
_DISTANCE_BLOCK = 4_000_000


def minkowski_distances(queries: np.ndarray, points: np.ndarray, p: int) -> np.ndarray:
    """Distances between every query row and every point row."""
    diff = np.abs(queries[:, None, :] - points[None, :, :])
    if p == 1:
        return diff.sum(axis=2)
    if p == 2:
        return np.sqrt((diff * diff).sum(axis=2))
    return (diff ** p).sum(axis=2) ** (1.0 / p)


def _blocks(n_queries: int, n_points: int, n_features: int):
    step = max(1, _DISTANCE_BLOCK // max(1, n_points * n_features))
    for start in range(0, n_queries, step):
        yield slice(start, min(start + step, n_queries))


def _vote(neighbor_labels: np.ndarray, weights: np.ndarray, n_classes: int) -> np.ndarray:
    """Weighted vote per row; returns class positions."""
    tally = np.zeros((neighbor_labels.shape[0], n_classes))
    rows = np.repeat(np.arange(neighbor_labels.shape[0]), neighbor_labels.shape[1])
    np.add.at(tally, (rows, neighbor_labels.reshape(-1)), weights.reshape(-1))
    return np.argmax(tally, axis=1)


def _neighbor_weights(distances: np.ndarray, scheme: str) -> np.ndarray:
    if scheme == "uniform":
        return np.ones_like(distances)
    # distance weighting: exact matches, when present, take the whole vote
    exact = distances == 0
    with np.errstate(divide="ignore"):
        weights = np.where(exact, 0.0, 1.0 / distances)
    has_exact = exact.any(axis=1)
    weights[has_exact] = exact[has_exact].astype(np.float64)
    return weights


class KNeighborsClassifier(Classifier):
    component_id = "knn"

    def __init__(self, n_neighbors: int = 5, weights: str = "uniform", p: int = 2):
        if n_neighbors < 1:
            raise ComponentFailure("knn: n_neighbors must be positive")
        if weights not in ("uniform", "distance"):
            raise ComponentFailure(f"knn: unknown weights {weights!r}")
        self.n_neighbors = n_neighbors
        self.weights = weights
        self.p = p

    def fit(self, X, y, cancel: Optional[CancelToken] = None):
        self.X_ = self._check_input(X)
        self.y_ = self._encode_labels(y)
        return self

    def predict(self, X, cancel: Optional[CancelToken] = None):
        X = self._check_input(X)
        k = min(self.n_neighbors, len(self.X_))
        out = np.empty(len(X), dtype=np.int64)
        for block in _blocks(len(X), len(self.X_), X.shape[1]):
            poll(cancel)
            dist = minkowski_distances(X[block], self.X_, self.p)
            nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
            near_dist = np.take_along_axis(dist, nearest, axis=1)
            weights = _neighbor_weights(near_dist, self.weights)
            out[block] = _vote(self.y_[nearest], weights, len(self.classes_))
        return self.classes_[out]


class RadiusNeighborsClassifier(Classifier):
    """Vote among training rows within `radius`; rows with none get the majority class."""
    component_id = "radius_neighbors"

    def __init__(self, radius: float = 1.0, weights: str = "uniform", p: int = 2):
        if radius <= 0:
            raise ComponentFailure("radius_neighbors: radius must be positive")
        if weights not in ("uniform", "distance"):
            raise ComponentFailure(f"radius_neighbors: unknown weights {weights!r}")
        self.radius = radius
        self.weights = weights
        self.p = p

    def fit(self, X, y, cancel: Optional[CancelToken] = None):
        self.X_ = self._check_input(X)
        self.y_ = self._encode_labels(y)
        self.outlier_ = int(np.argmax(np.bincount(self.y_, minlength=len(self.classes_))))
        return self

    def predict(self, X, cancel: Optional[CancelToken] = None):
        X = self._check_input(X)
        n_classes = len(self.classes_)
        out = np.empty(len(X), dtype=np.int64)
        labels = np.broadcast_to(self.y_, (1, len(self.y_)))
        for block in _blocks(len(X), len(self.X_), X.shape[1]):
            poll(cancel)
            dist = minkowski_distances(X[block], self.X_, self.p)
            inside = dist <= self.radius
            weights = _neighbor_weights(dist, self.weights) * inside
            tally = np.zeros((dist.shape[0], n_classes))
            for c in range(n_classes):
                tally[:, c] = (weights * (labels == c)).sum(axis=1)
            votes = np.argmax(tally, axis=1)
            votes[~inside.any(axis=1)] = self.outlier_
            out[block] = votes
        return self.classes_[out]


class NearestCentroid(Classifier):
    component_id = "nearest_centroid"

    def __init__(self, p: int = 2):
        self.p = p

    def fit(self, X, y, cancel: Optional[CancelToken] = None):
        X = self._check_input(X)
        positions = self._encode_labels(y)
        self.centroids_ = np.vstack([X[positions == c].mean(axis=0) for c in range(len(self.classes_))])
        return self

    def predict(self, X, cancel: Optional[CancelToken] = None):
        X = self._check_input(X)
        dist = minkowski_distances(X, self.centroids_, self.p)
        return self.classes_[np.argmin(dist, axis=1)]


class GaussianNB(Classifier):
    component_id = "gaussian_nb"

    def __init__(self, var_smoothing: float = 1e-9):
        self.var_smoothing = var_smoothing

    def fit(self, X, y, cancel: Optional[CancelToken] = None):
        X = self._check_input(X)
        positions = self._encode_labels(y)
        n_classes = len(self.classes_)
        epsilon = self.var_smoothing * X.var(axis=0).max()
        if epsilon <= 0:
            epsilon = max(self.var_smoothing, 1e-12)
        self.theta_ = np.vstack([X[positions == c].mean(axis=0) for c in range(n_classes)])
        self.var_ = np.vstack([X[positions == c].var(axis=0) for c in range(n_classes)]) + epsilon
        self.log_prior_ = np.log(np.bincount(positions, minlength=n_classes) / len(positions))
        return self

    def joint_log_likelihood(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        jll = np.empty((len(X), len(self.classes_)))
        for c in range(len(self.classes_)):
            normaliser = -0.5 * np.log(2.0 * np.pi * self.var_[c]).sum()
            spread = -0.5 * (((X - self.theta_[c]) ** 2) / self.var_[c]).sum(axis=1)
            jll[:, c] = self.log_prior_[c] + normaliser + spread
        return jll

    def predict(self, X, cancel: Optional[CancelToken] = None):
        return self.classes_[np.argmax(self.joint_log_likelihood(X), axis=1)]


class BernoulliNB(Classifier):
    component_id = "bernoulli_nb"

    def __init__(self, alpha: float = 1.0, binarize: float = 0.0):
        if alpha <= 0:
            raise ComponentFailure("bernoulli_nb: alpha must be positive")
        self.alpha = alpha
        self.binarize = binarize

    def fit(self, X, y, cancel: Optional[CancelToken] = None):
        X = (self._check_input(X) > self.binarize).astype(np.float64)
        positions = self._encode_labels(y)
        n_classes = len(self.classes_)
        counts = np.bincount(positions, minlength=n_classes)
        ones = np.vstack([X[positions == c].sum(axis=0) for c in range(n_classes)])
        prob = (ones + self.alpha) / (counts[:, None] + 2.0 * self.alpha)
        self.log_prob_ = np.log(prob)
        self.log_neg_prob_ = np.log1p(-prob)
        self.log_prior_ = np.log(counts / counts.sum())
        return self

    def predict(self, X, cancel: Optional[CancelToken] = None):
        X = (self._check_input(X) > self.binarize).astype(np.float64)
        jll = X @ self.log_prob_.T + (1.0 - X) @ self.log_neg_prob_.T + self.log_prior_
        return self.classes_[np.argmax(jll, axis=1)]


def _impurity(counts: np.ndarray, criterion: str) -> np.ndarray:
    """Impurity of class-count rows (last axis = classes)."""
    totals = counts.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        prob = np.where(totals > 0, counts / totals, 0.0)
        if criterion == "gini":
            return 1.0 - (prob * prob).sum(axis=-1)
        logs = np.where(prob > 0, np.log2(np.where(prob > 0, prob, 1.0)), 0.0)
        return -(prob * logs).sum(axis=-1)


class DecisionTreeClassifier(Classifier):
    """
    CART tree with axis-aligned threshold splits.

    Nodes keep splitting until pure, the depth limit is reached or no split
    respects `min_samples_leaf`; a zero-gain split is still taken when it is
    the best available.
    """
    component_id = "decision_tree"

    def __init__(self, criterion: str = "gini", max_depth: Optional[int] = None,
                 min_samples_leaf: int = 1, min_samples_split: int = 2):
        if criterion not in ("gini", "entropy"):
            raise ComponentFailure(f"decision_tree: unknown criterion {criterion!r}")
        if max_depth is not None and max_depth < 1:
            raise ComponentFailure("decision_tree: max_depth must be positive")
        self.criterion = criterion
        self.max_depth = max_depth
        self.min_samples_leaf = max(1, min_samples_leaf)
        self.min_samples_split = max(2, min_samples_split)

    def _best_split(self, X: np.ndarray, y: np.ndarray, rows: np.ndarray, n_classes: int):
        n = len(rows)
        leaf = self.min_samples_leaf
        if n < self.min_samples_split or n < 2 * leaf:
            return None
        total = np.bincount(y[rows], minlength=n_classes)
        best = None  # (impurity, feature, threshold)
        for f in range(X.shape[1]):
            values = X[rows, f]
            order = np.argsort(values, kind="stable")
            sorted_values = values[order]
            onehot = np.zeros((n, n_classes))
            onehot[np.arange(n), y[rows][order]] = 1.0
            left = np.cumsum(onehot, axis=0)[:-1]  # left holds the first i+1 rows
            sizes = np.arange(1, n)
            valid = (sorted_values[:-1] < sorted_values[1:]) & (sizes >= leaf) & (n - sizes >= leaf)
            if not valid.any():
                continue
            right = total - left
            weighted = (sizes * _impurity(left, self.criterion)
                        + (n - sizes) * _impurity(right, self.criterion)) / n
            weighted = np.where(valid, weighted, np.inf)
            i = int(np.argmin(weighted))
            if best is None or weighted[i] < best[0]:
                lo, hi = sorted_values[i], sorted_values[i + 1]
                threshold = (lo + hi) / 2.0
                if not lo <= threshold < hi:
                    threshold = lo
                best = (weighted[i], f, threshold)
        return best

    def fit(self, X, y, cancel: Optional[CancelToken] = None):
        X = self._check_input(X)
        positions = self._encode_labels(y)
        n_classes = len(self.classes_)

        feature, threshold, left, right, value = [], [], [], [], []

        def new_node(rows: np.ndarray) -> int:
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(np.bincount(positions[rows], minlength=n_classes))
            return len(feature) - 1

        stack = [(new_node(np.arange(len(X))), np.arange(len(X)), 1)]
        while stack:
            poll(cancel)
            node, rows, depth = stack.pop()
            if np.count_nonzero(value[node]) <= 1:
                continue
            if self.max_depth is not None and depth > self.max_depth:
                continue
            split = self._best_split(X, positions, rows, n_classes)
            if split is None:
                continue
            _, f, thr = split
            goes_left = X[rows, f] <= thr
            feature[node], threshold[node] = f, thr
            left_rows, right_rows = rows[goes_left], rows[~goes_left]
            left[node] = new_node(left_rows)
            right[node] = new_node(right_rows)
            stack.append((right[node], right_rows, depth + 1))
            stack.append((left[node], left_rows, depth + 1))

        self.feature_ = np.array(feature)
        self.threshold_ = np.array(threshold)
        self.left_ = np.array(left)
        self.right_ = np.array(right)
        self.value_ = np.vstack(value)
        return self

    @property
    def depth(self) -> int:
        depths = {0: 0}
        for node in range(len(self.feature_)):
            if self.left_[node] >= 0:
                depths[self.left_[node]] = depths[self.right_[node]] = depths[node] + 1
        return max(depths.values())

    def predict(self, X, cancel: Optional[CancelToken] = None):
        X = self._check_input(X)
        node = np.zeros(len(X), dtype=np.int64)
        active = self.left_[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            current = node[idx]
            goes_left = X[idx, self.feature_[current]] <= self.threshold_[current]
            node[idx] = np.where(goes_left, self.left_[current], self.right_[current])
            active = self.left_[node] >= 0
        return self.classes_[np.argmax(self.value_[node], axis=1)]


def logistic_loss_and_gradient(
    weights: np.ndarray,
    bias: np.ndarray,
    X: np.ndarray,
    targets: np.ndarray,
    alpha: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """
    Multinomial cross-entropy with L2 penalty and its gradient.

    Args:
        weights: (n_features, n_classes) coefficients
        bias: (n_classes,) intercepts
        X: (n, n_features) inputs
        targets: (n, n_classes) one-hot labels
        alpha: L2 strength, penalty = alpha / 2 * ||weights||^2

    Returns:
        (loss, d loss / d weights, d loss / d bias)
    """
    logits = X @ weights + bias
    logits -= logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(logits).sum(axis=1, keepdims=True))
    log_prob = logits - log_norm
    n = len(X)
    loss = -(targets * log_prob).sum() / n + 0.5 * alpha * (weights * weights).sum()
    residual = (np.exp(log_prob) - targets) / n
    return float(loss), X.T @ residual + alpha * weights, residual.sum(axis=0)


class LogisticRegression(Classifier):
    """Softmax regression trained by full-batch gradient descent."""
    component_id = "logistic_regression"

    def __init__(self, alpha: float = 1e-4, max_iter: int = 100,
                 learning_rate: float = 0.1, tol: float = 1e-6):
        if learning_rate <= 0:
            raise ComponentFailure("logistic_regression: learning_rate must be positive")
        self.alpha = alpha
        self.max_iter = max_iter
        self.learning_rate = learning_rate
        self.tol = tol

    def fit(self, X, y, cancel: Optional[CancelToken] = None):
        X = self._check_input(X)
        positions = self._encode_labels(y)
        n_classes = len(self.classes_)
        targets = np.zeros((len(X), n_classes))
        targets[np.arange(len(X)), positions] = 1.0

        self.coef_ = np.zeros((X.shape[1], n_classes))
        self.intercept_ = np.zeros(n_classes)
        self.loss_curve_: list[float] = []
        with np.errstate(over="raise", invalid="raise"):
            try:
                for iteration in range(self.max_iter):
                    if iteration % 10 == 0:
                        poll(cancel)
                    loss, grad_w, grad_b = logistic_loss_and_gradient(
                        self.coef_, self.intercept_, X, targets, self.alpha)
                    self.loss_curve_.append(loss)
                    self.coef_ -= self.learning_rate * grad_w
                    self.intercept_ -= self.learning_rate * grad_b
                    if max(np.abs(grad_w).max(initial=0.0), np.abs(grad_b).max()) < self.tol:
                        break
            except FloatingPointError as e:
                raise ComponentFailure(f"logistic_regression diverged: {e}") from None
        if not (np.isfinite(self.coef_).all() and np.isfinite(self.intercept_).all()):
            raise ComponentFailure("logistic_regression diverged")
        return self

    def predict(self, X, cancel: Optional[CancelToken] = None):
        X = self._check_input(X)
        return self.classes_[np.argmax(X @ self.coef_ + self.intercept_, axis=1)]


class Perceptron(Classifier):
    """Multi-class perceptron; the sample order of every epoch is seeded."""
    component_id = "perceptron"
    uses_seed = True

    def __init__(self, epochs: int = 10, learning_rate: float = 1.0, seed: int = 0):
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.seed = seed

    def fit(self, X, y, cancel: Optional[CancelToken] = None):
        X = self._check_input(X)
        positions = self._encode_labels(y)
        rng = np.random.default_rng(self.seed)
        self.coef_ = np.zeros((len(self.classes_), X.shape[1]))
        self.intercept_ = np.zeros(len(self.classes_))
        for _ in range(self.epochs):
            poll(cancel)
            mistakes = 0
            for i in rng.permutation(len(X)):
                guess = int(np.argmax(self.coef_ @ X[i] + self.intercept_))
                target = positions[i]
                if guess != target:
                    mistakes += 1
                    step = self.learning_rate * X[i]
                    self.coef_[target] += step
                    self.intercept_[target] += self.learning_rate
                    self.coef_[guess] -= step
                    self.intercept_[guess] -= self.learning_rate
            if mistakes == 0:
                break
        if not np.isfinite(self.coef_).all():
            raise ComponentFailure("perceptron weights overflowed")
        return self

    def predict(self, X, cancel: Optional[CancelToken] = None):
        X = self._check_input(X)
        return self.classes_[np.argmax(X @ self.coef_.T + self.intercept_, axis=1)]
