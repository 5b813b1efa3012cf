"""Feature-vector classifiers behind one interface, with train-only standardisation."""

from __future__ import annotations

import numpy as np

from ..features import SELECTED_FEATURES
from .knn import KNeighbors
from .logistic import LogisticRegression
from .naive_bayes import GaussianNB
from .preprocessing import Standardizer
from .tree import DecisionTree, RandomForest

ESTIMATORS = {
    "gaussian_nb": GaussianNB,
    "knn": KNeighbors,
    "logistic": LogisticRegression,
    "decision_tree": DecisionTree,
    "random_forest": RandomForest,
}

# tuned values for the implemented learners
DEFAULT_HYPERPARAMS = {
    "gaussian_nb": {"var_smoothing": 1e-9},
    "knn": {"k": 4, "weighting": "distance"},
    "logistic": {"l2": 1e-3},
    "decision_tree": {"max_depth": 6, "min_samples_split": 3, "criterion": "gini"},
    "random_forest": {"n_estimators": 10, "max_depth": 4, "min_samples_split": 3},
}

# recorded for reference; these learners are not implemented here
REFERENCE_ONLY_HYPERPARAMS = {
    "svm": {"kernel": "rbf", "C": 1000, "gamma": 0.001},
    "adaboost": {"n_estimators": 10, "algorithm": "SAMME"},
    "gradient_boosting": {"n_estimators": 10},
}


class ClassicModel:
    """Standardizer + estimator over a fixed list of named segment statistics."""

    def __init__(self, kind: str, estimator, standardizer: Standardizer, feature_names=SELECTED_FEATURES):
        self.kind = kind
        self.estimator = estimator
        self.standardizer = standardizer
        self.feature_names = tuple(feature_names)
        self.n_classes = estimator.n_classes

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.estimator.predict_proba(self.standardizer.transform(np.atleast_2d(X)))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.predict_proba(X).argmax(axis=1)

    def rows_from_vectors(self, vectors) -> np.ndarray:
        return np.array([[v[name] for name in self.feature_names] for v in vectors])


def make_estimator(kind: str, params: dict | None = None, seed: int = 0):
    if kind not in ESTIMATORS:
        if kind in REFERENCE_ONLY_HYPERPARAMS:
            raise NotImplementedError(f"{kind} is listed for reference only and is not implemented")
        raise ValueError(f"unknown model family {kind!r}")
    merged = dict(DEFAULT_HYPERPARAMS[kind])
    merged.update(params or {})
    if kind == "random_forest":
        merged.setdefault("seed", seed)
    return ESTIMATORS[kind](**merged)


def fit_classic(kind: str, X: np.ndarray, y: np.ndarray, params: dict | None = None, seed: int = 0,
                feature_names=SELECTED_FEATURES) -> ClassicModel:
    standardizer = Standardizer().fit(X)
    estimator = make_estimator(kind, params, seed).fit(standardizer.transform(X), y)
    return ClassicModel(kind, estimator, standardizer, feature_names)
