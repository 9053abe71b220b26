"""Native dataset, metric, validation and component implementations."""

from dsge_automl.ml.classifiers import (
    BernoulliNB,
    DecisionTreeClassifier,
    GaussianNB,
    KNeighborsClassifier,
    LogisticRegression,
    NearestCentroid,
    Perceptron,
    RadiusNeighborsClassifier,
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
)

# Component id -> implementing class
IMPLEMENTATIONS = {
    cls.component_id: cls
    for cls in (
        Imputer,
        MinMaxScaler,
        StandardScaler,
        MaxAbsScaler,
        RobustScaler,
        Normalizer,
        Binarizer,
        VarianceThreshold,
        SelectPercentile,
        KNeighborsClassifier,
        RadiusNeighborsClassifier,
        NearestCentroid,
        GaussianNB,
        BernoulliNB,
        DecisionTreeClassifier,
        LogisticRegression,
        Perceptron,
    )
}
