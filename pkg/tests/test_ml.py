"""Tests for the native preprocessing and classifier implementations."""

import numpy as np
import pytest

from dsge_automl.core.cancel import CancelToken
from dsge_automl.core.errors import ComponentFailure, DatasetError, EvaluationTimeout
from dsge_automl.ml import IMPLEMENTATIONS
from dsge_automl.ml.classifiers import (
    BernoulliNB,
    DecisionTreeClassifier,
    GaussianNB,
    KNeighborsClassifier,
    LogisticRegression,
    NearestCentroid,
    Perceptron,
    RadiusNeighborsClassifier,
    logistic_loss_and_gradient,
    minkowski_distances,
)
from dsge_automl.ml.preprocessing import (
    Binarizer,
    Imputer,
    MaxAbsScaler,
    MinMaxScaler,
    Normalizer,
    RobustScaler,
    SelectPercentile,
    StandardScaler,
    VarianceThreshold,
    anova_f_scores,
)
from dsge_automl.ml.dataset import Dataset, load_csv, save_csv


def accuracy(model, X, y) -> float:
    return float(np.mean(model.predict(X) == y))


@pytest.fixture(scope="module")
def matrix():
    rng = np.random.default_rng(0)
    return rng.normal(loc=3.0, scale=2.0, size=(50, 4))


# =============================================================================
# Preprocessing
# =============================================================================


class TestImputer:
    X = np.array([[1.0, np.nan], [3.0, 4.0], [np.nan, 4.0], [8.0, 10.0]])

    @pytest.mark.parametrize("strategy,expected", [
        ("mean", [4.0, 6.0]),
        ("median", [3.0, 4.0]),
        ("most_frequent", [1.0, 4.0]),
    ])
    def test_statistics(self, strategy, expected):
        imputer = Imputer(strategy).fit(self.X)
        np.testing.assert_allclose(imputer.statistics_, expected)
        out = imputer.transform(self.X)
        assert not np.isnan(out).any()
        np.testing.assert_allclose(out[2, 0], expected[0])

    def test_all_missing_column_becomes_zero(self):
        X = np.array([[np.nan, 1.0], [np.nan, 2.0]])
        np.testing.assert_array_equal(Imputer().fit_transform(X, None)[:, 0], [0.0, 0.0])

    def test_unknown_strategy(self):
        with pytest.raises(ComponentFailure):
            Imputer("mode")

    def test_other_components_reject_missing(self):
        with pytest.raises(ComponentFailure):
            StandardScaler().fit(self.X)


class TestScalers:
    def test_min_max_range(self, matrix):
        out = MinMaxScaler().fit_transform(matrix, None)
        np.testing.assert_allclose(out.min(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.max(axis=0), 1.0)

    def test_standard_moments(self, matrix):
        out = StandardScaler().fit_transform(matrix, None)
        np.testing.assert_allclose(out.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.std(axis=0), 1.0)

    def test_max_abs(self, matrix):
        out = MaxAbsScaler().fit_transform(matrix - 3.0, None)
        np.testing.assert_allclose(np.abs(out).max(axis=0), 1.0)

    def test_robust_centre(self, matrix):
        out = RobustScaler().fit_transform(matrix, None)
        np.testing.assert_allclose(np.median(out, axis=0), 0.0, atol=1e-12)

    @pytest.mark.parametrize("scaler", [MinMaxScaler, StandardScaler, MaxAbsScaler, RobustScaler])
    def test_constant_column_is_finite(self, scaler):
        X = np.column_stack([np.full(5, 2.0), np.arange(5.0)])
        out = scaler().fit_transform(X, None)
        assert np.isfinite(out).all()

    def test_test_rows_use_train_statistics(self):
        scaler = MinMaxScaler().fit(np.array([[0.0], [10.0]]))
        np.testing.assert_allclose(scaler.transform(np.array([[20.0], [-5.0]])), [[2.0], [-0.5]])

    @pytest.mark.parametrize("norm,measure", [
        ("l1", lambda r: np.abs(r).sum(axis=1)),
        ("l2", lambda r: np.sqrt((r * r).sum(axis=1))),
        ("max", lambda r: np.abs(r).max(axis=1)),
    ])
    def test_normalizer(self, matrix, norm, measure):
        out = Normalizer(norm).fit_transform(matrix, None)
        np.testing.assert_allclose(measure(out), 1.0)

    def test_normalizer_keeps_zero_rows(self):
        out = Normalizer().fit_transform(np.zeros((2, 3)), None)
        np.testing.assert_array_equal(out, 0.0)

    def test_binarizer(self):
        out = Binarizer(0.5).fit_transform(np.array([[0.2, 0.5, 0.9]]), None)
        np.testing.assert_array_equal(out, [[0.0, 0.0, 1.0]])


class TestFeatureSelection:
    def test_variance_threshold(self):
        X = np.array([[1.0, 0.0, 5.0], [1.0, 1.0, 5.1], [1.0, 0.0, 4.9]])
        selector = VarianceThreshold(0.01).fit(X)
        np.testing.assert_array_equal(selector.support_, [1])
        assert selector.transform(X).shape == (3, 1)

    def test_variance_threshold_removing_everything(self):
        with pytest.raises(ComponentFailure):
            VarianceThreshold(0.0).fit(np.ones((4, 2)))

    def test_anova_ranks_informative_feature(self, blobs):
        scores = anova_f_scores(blobs.features, blobs.labels)
        informative = scores[:3].min()
        assert informative > scores[3:].max()

    @pytest.mark.parametrize("percentile,kept", [(1, 1), (10, 1), (30, 3), (55, 5), (100, 10)])
    def test_select_percentile_keeps_at_least_one(self, blobs, percentile, kept):
        out = SelectPercentile(percentile).fit_transform(blobs.features, blobs.labels)
        assert out.shape == (blobs.n_instances, kept)

    def test_select_percentile_picks_informative(self, blobs):
        selector = SelectPercentile(30).fit(blobs.features, blobs.labels)
        np.testing.assert_array_equal(selector.support_, [0, 1, 2])

    def test_select_percentile_single_class(self):
        X = np.arange(12.0).reshape(4, 3)
        selector = SelectPercentile(50).fit(X, np.zeros(4, dtype=int))
        assert len(selector.support_) == 1


# =============================================================================
# Classifiers
# =============================================================================


class TestNeighbours:
    def test_minkowski(self):
        a = np.array([[0.0, 0.0]])
        b = np.array([[3.0, 4.0]])
        assert minkowski_distances(a, b, 1)[0, 0] == pytest.approx(7.0)
        assert minkowski_distances(a, b, 2)[0, 0] == pytest.approx(5.0)

    def test_one_neighbour_memorises(self, blobs):
        model = KNeighborsClassifier(n_neighbors=1).fit(blobs.features, blobs.labels)
        assert accuracy(model, blobs.features, blobs.labels) == 1.0

    def test_k_larger_than_train(self):
        model = KNeighborsClassifier(n_neighbors=50).fit(np.array([[0.0], [1.0], [2.0]]), np.array([1, 1, 0]))
        np.testing.assert_array_equal(model.predict(np.array([[2.0]])), [1])

    def test_tie_goes_to_lower_class(self):
        model = KNeighborsClassifier(n_neighbors=2).fit(np.array([[0.0], [2.0]]), np.array([1, 0]))
        np.testing.assert_array_equal(model.predict(np.array([[1.0]])), [0])

    def test_distance_weighting_exact_match(self):
        X = np.array([[0.0], [1.0], [1.1]])
        model = KNeighborsClassifier(n_neighbors=3, weights="distance").fit(X, np.array([0, 1, 1]))
        np.testing.assert_array_equal(model.predict(np.array([[0.0]])), [0])

    def test_labels_keep_their_values(self):
        model = KNeighborsClassifier(n_neighbors=1).fit(np.array([[0.0], [5.0]]), np.array([2, 7]))
        np.testing.assert_array_equal(model.predict(np.array([[4.0], [1.0]])), [7, 2])

    def test_radius_outlier_gets_majority(self):
        X = np.array([[0.0], [0.2], [5.0]])
        model = RadiusNeighborsClassifier(radius=0.5).fit(X, np.array([1, 1, 0]))
        np.testing.assert_array_equal(model.predict(np.array([[5.1], [100.0]])), [0, 1])

    def test_nearest_centroid_manhattan(self):
        X = np.array([[0.0, 0.0], [0.0, 2.0], [6.0, 6.0], [8.0, 6.0]])
        model = NearestCentroid(p=1).fit(X, np.array([0, 0, 1, 1]))
        np.testing.assert_array_equal(model.predict(np.array([[1.0, 1.0], [6.0, 5.0]])), [0, 1])

    def test_predict_polls_cancel(self, blobs):
        model = KNeighborsClassifier().fit(blobs.features, blobs.labels)
        token = CancelToken()
        token.cancel()
        with pytest.raises(EvaluationTimeout):
            model.predict(blobs.features, token)


class TestNaiveBayes:
    def test_gaussian_separates_blobs(self, blobs):
        model = GaussianNB().fit(blobs.features, blobs.labels)
        assert accuracy(model, blobs.features, blobs.labels) > 0.9

    def test_gaussian_constant_feature_is_finite(self):
        X = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 5.0], [1.0, 6.0]])
        model = GaussianNB(var_smoothing=0.0).fit(X, np.array([0, 0, 1, 1]))
        assert np.isfinite(model.joint_log_likelihood(X)).all()
        np.testing.assert_array_equal(model.predict(X), [0, 0, 1, 1])

    def test_gaussian_priors(self):
        model = GaussianNB().fit(np.array([[0.0], [1.0], [2.0], [9.0]]), np.array([0, 0, 0, 1]))
        np.testing.assert_allclose(np.exp(model.log_prior_), [0.75, 0.25])

    def test_bernoulli_on_binary_patterns(self):
        X = np.array([[1, 0, 0], [1, 1, 0], [0, 0, 1], [0, 1, 1]], dtype=float)
        model = BernoulliNB(alpha=1.0, binarize=0.5).fit(X, np.array([0, 0, 1, 1]))
        np.testing.assert_array_equal(model.predict(np.array([[1, 0, 0], [0, 0, 1]], dtype=float)), [0, 1])

    def test_bernoulli_smoothing(self):
        X = np.array([[1.0], [1.0]])
        model = BernoulliNB(alpha=1.0, binarize=0.0).fit(X, np.array([0, 1]))
        np.testing.assert_allclose(np.exp(model.log_prob_), [[2 / 3], [2 / 3]])


class TestDecisionTree:
    def test_fits_training_data(self, blobs):
        model = DecisionTreeClassifier().fit(blobs.features, blobs.labels)
        assert accuracy(model, blobs.features, blobs.labels) == 1.0

    def test_max_depth(self, blobs):
        model = DecisionTreeClassifier(max_depth=2).fit(blobs.features, blobs.labels)
        assert model.depth <= 2

    def test_stump_on_threshold(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        model = DecisionTreeClassifier(max_depth=1, criterion="entropy").fit(X, np.array([0, 0, 1, 1]))
        assert model.depth == 1
        assert model.threshold_[0] == pytest.approx(1.5)
        np.testing.assert_array_equal(model.predict(np.array([[1.4], [1.6]])), [0, 1])

    def test_min_samples_leaf(self):
        X = np.arange(10.0)[:, None]
        y = np.array([0] * 9 + [1])
        model = DecisionTreeClassifier(min_samples_leaf=2).fit(X, y)
        leaves = model.left_ < 0
        assert model.value_[leaves].sum(axis=1).min() >= 2

    def test_pure_node_is_a_leaf(self):
        model = DecisionTreeClassifier().fit(np.array([[0.0], [1.0]]), np.array([1, 1]))
        assert model.depth == 0
        np.testing.assert_array_equal(model.predict(np.array([[5.0]])), [1])

    def test_fit_polls_cancel(self, blobs):
        token = CancelToken()
        token.cancel()
        with pytest.raises(EvaluationTimeout):
            DecisionTreeClassifier().fit(blobs.features, blobs.labels, token)


class TestLinearModels:
    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(20, 4))
        targets = np.eye(3)[rng.integers(0, 3, size=20)]
        weights = rng.normal(size=(4, 3))
        bias = rng.normal(size=3)
        alpha = 0.3

        _, grad_w, grad_b = logistic_loss_and_gradient(weights, bias, X, targets, alpha)
        eps = 1e-6
        numeric_w = np.zeros_like(weights)
        for idx in np.ndindex(*weights.shape):
            up, down = weights.copy(), weights.copy()
            up[idx] += eps
            down[idx] -= eps
            numeric_w[idx] = (logistic_loss_and_gradient(up, bias, X, targets, alpha)[0]
                              - logistic_loss_and_gradient(down, bias, X, targets, alpha)[0]) / (2 * eps)
        numeric_b = np.zeros_like(bias)
        for i in range(len(bias)):
            up, down = bias.copy(), bias.copy()
            up[i] += eps
            down[i] -= eps
            numeric_b[i] = (logistic_loss_and_gradient(weights, up, X, targets, alpha)[0]
                            - logistic_loss_and_gradient(weights, down, X, targets, alpha)[0]) / (2 * eps)

        assert np.linalg.norm(grad_w - numeric_w) / np.linalg.norm(numeric_w) < 1e-4
        assert np.linalg.norm(grad_b - numeric_b) / np.linalg.norm(numeric_b) < 1e-4

    def test_loss_decreases(self, blobs):
        model = LogisticRegression(max_iter=200, learning_rate=0.1, tol=0.0).fit(blobs.features, blobs.labels)
        curve = np.array(model.loss_curve_)
        assert len(curve) == 200
        assert (np.diff(curve) <= 1e-12).all()
        assert accuracy(model, blobs.features, blobs.labels) > 0.9

    def test_divergence_is_component_failure(self):
        X = np.array([[1e200, -1e200], [-1e200, 1e200]])
        with pytest.raises(ComponentFailure):
            LogisticRegression(learning_rate=10.0, max_iter=50).fit(X, np.array([0, 1]))

    def test_perceptron_is_seeded(self, blobs):
        a = Perceptron(epochs=3, seed=5).fit(blobs.features, blobs.labels)
        b = Perceptron(epochs=3, seed=5).fit(blobs.features, blobs.labels)
        np.testing.assert_array_equal(a.coef_, b.coef_)

    def test_perceptron_separable(self):
        X = np.array([[0.0, 0.0], [0.0, 1.0], [4.0, 4.0], [5.0, 4.0]])
        model = Perceptron(epochs=50).fit(X, np.array([0, 0, 1, 1]))
        np.testing.assert_array_equal(model.predict(X), [0, 0, 1, 1])


class TestImplementations:
    def test_every_component_has_an_id(self):
        assert len(IMPLEMENTATIONS) == 17
        assert all(name == cls.component_id for name, cls in IMPLEMENTATIONS.items())

    @pytest.mark.parametrize("name", sorted(IMPLEMENTATIONS))
    def test_rejects_infinite_input(self, name):
        component = IMPLEMENTATIONS[name]()
        X = np.array([[0.0, 1.0], [np.inf, 2.0], [1.0, 0.0], [2.0, 2.0]])
        with pytest.raises(ComponentFailure):
            component.fit(X, np.array([0, 1, 0, 1]))


# =============================================================================
# Datasets
# =============================================================================


class TestLoadCsv:
    def write(self, tmp_path, text: str):
        path = tmp_path / "data.csv"
        path.write_text(text)
        return path

    def test_categorical_columns_are_one_hot(self, tmp_path):
        path = self.write(tmp_path, "colour,size,label\nred,1,b\nblue,?,a\nred,3,b\n")
        data = load_csv(path, "label")
        assert data.feature_names == ("colour=blue", "colour=red", "size")
        np.testing.assert_array_equal(data.features[:, :2], [[0, 1], [1, 0], [0, 1]])
        assert np.isnan(data.features[1, 2])
        assert data.class_names == ("a", "b")
        np.testing.assert_array_equal(data.labels, [1, 0, 1])

    def test_missing_categorical_cell(self, tmp_path):
        path = self.write(tmp_path, "colour,label\nred,x\n?,y\nblue,x\n")
        data = load_csv(path, "label")
        assert np.isnan(data.features[1]).all()
        assert data.has_missing

    def test_custom_missing_token(self, tmp_path):
        path = self.write(tmp_path, "v,label\n1,x\nNA,y\n")
        assert np.isnan(load_csv(path, "label", missing_token="NA").features[1, 0])

    @pytest.mark.parametrize("text,label", [
        ("a,b\n1,x\n2,y\n", "class"),
        ("v,label\n", "label"),
        ("v,label\n1,x\n2,x\n", "label"),
        ("v,label\n1,x\n2,?\n", "label"),
    ])
    def test_rejects(self, tmp_path, text, label):
        with pytest.raises(DatasetError):
            load_csv(self.write(tmp_path, text), label)

    def test_save_and_load(self, tmp_path, blobs):
        path = tmp_path / "blobs.csv"
        save_csv(blobs, path)
        again = load_csv(path, "class")
        np.testing.assert_array_equal(again.features, blobs.features)
        np.testing.assert_array_equal(again.labels, blobs.labels)

    def test_shipped_weather_data(self, repo_root):
        data = load_csv(repo_root / "experiments" / "weather_demo" / "weather.csv", "play")
        assert data.class_names == ("no", "yes")
        assert "outlook=sunny" in data.feature_names
        assert "temperature" in data.feature_names

    def test_subset_keeps_class_list(self, blobs):
        part = blobs.subset([0, 1, 2])
        assert part.n_instances == 3
        assert part.class_names == blobs.class_names

    def test_mismatched_rows(self):
        with pytest.raises(DatasetError):
            Dataset(np.zeros((3, 1)), np.array([0, 1]), ("a", "b"), ("f",))
