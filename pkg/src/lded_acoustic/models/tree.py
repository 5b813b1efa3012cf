"""CART classification trees (Gini) and a bootstrap random forest."""

from __future__ import annotations

import math

import numpy as np

_GAIN_TOL = 1e-12


def gini(counts: np.ndarray) -> np.ndarray:
    """Gini impurity of class-count vectors along the last axis."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum(axis=-1)
    safe = np.where(total > 0, total, 1.0)
    p = counts / safe[..., None]
    return np.where(total > 0, 1.0 - np.sum(p * p, axis=-1), 0.0)


def best_split(X: np.ndarray, y: np.ndarray, n_classes: int, features=None):
    """Best (gain, feature, threshold) over midpoints of consecutive distinct values.

    Ties go to the lowest feature index, then the lowest threshold. Returns
    ``None`` when no split separates the rows.
    """
    n = y.shape[0]
    parent = gini(np.bincount(y, minlength=n_classes))
    onehot = np.eye(n_classes)[y]
    best = None
    for f in range(X.shape[1]) if features is None else features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        left = np.cumsum(onehot[order], axis=0)[:-1]
        valid = xs[1:] > xs[:-1]
        if not valid.any():
            continue
        n_left = np.arange(1, n, dtype=np.float64)
        right = left[-1] + onehot[order[-1]] - left
        gain = parent - (n_left * gini(left) + (n - n_left) * gini(right)) / n
        gain = np.where(valid, gain, -np.inf)
        i = int(np.argmax(gain))  # first maximum -> lowest threshold
        if best is None or gain[i] > best[0] + _GAIN_TOL:
            thr = 0.5 * (xs[i] + xs[i + 1])
            if not xs[i] <= thr < xs[i + 1]:
                thr = xs[i]
            best = (float(gain[i]), int(f), float(thr))
    return best


class DecisionTree:
    kind = "decision_tree"

    def __init__(
        self,
        max_depth: int = 6,
        min_samples_split: int = 3,
        criterion: str = "gini",
        max_features: int | None = None,
        n_classes: int = 3,
        seed: int | None = None,
    ):
        if criterion != "gini":
            raise ValueError("only the Gini criterion is implemented")
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.criterion = criterion
        self.max_features = max_features
        self.n_classes = n_classes
        self.seed = seed

    def fit(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator | None = None) -> "DecisionTree":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if X.shape[0] == 0:
            raise ValueError("cannot fit a tree on zero rows")
        if rng is None:
            rng = np.random.default_rng(self.seed)
        self.n_features_ = X.shape[1]
        feature, threshold, left, right, value, impurity, n_node = [], [], [], [], [], [], []

        def grow(idx: np.ndarray, depth: int) -> int:
            node = len(feature)
            counts = np.bincount(y[idx], minlength=self.n_classes).astype(np.float64)
            imp = float(gini(counts))
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(counts / counts.sum())
            impurity.append(imp)
            n_node.append(float(idx.shape[0]))
            if depth >= self.max_depth or idx.shape[0] < self.min_samples_split or imp <= 0.0:
                return node
            candidates = None
            if self.max_features is not None and self.max_features < self.n_features_:
                candidates = np.sort(rng.choice(self.n_features_, self.max_features, replace=False))
            split = best_split(X[idx], y[idx], self.n_classes, candidates)
            if split is None or split[0] <= _GAIN_TOL:
                return node
            _, f, thr = split
            go_left = X[idx, f] <= thr
            feature[node], threshold[node] = f, thr
            left[node] = grow(idx[go_left], depth + 1)
            right[node] = grow(idx[~go_left], depth + 1)
            return node

        grow(np.arange(X.shape[0]), 0)
        self.feature_ = np.array(feature, dtype=np.int64)
        self.threshold_ = np.array(threshold)
        self.left_ = np.array(left, dtype=np.int64)
        self.right_ = np.array(right, dtype=np.int64)
        self.value_ = np.array(value)
        self.impurity_ = np.array(impurity)
        self.n_node_ = np.array(n_node)
        return self

    @property
    def depth(self) -> int:
        def walk(i: int) -> int:
            if self.feature_[i] < 0:
                return 0
            return 1 + max(walk(self.left_[i]), walk(self.right_[i]))

        return walk(0)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row."""
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature_[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            cur = node[rows]
            go_left = X[rows, self.feature_[cur]] <= self.threshold_[cur]
            node[rows] = np.where(go_left, self.left_[cur], self.right_[cur])
            active = self.feature_[node] >= 0
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.value_[self.apply(X)]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.predict_proba(X).argmax(axis=1)

    def impurity_decrease(self) -> np.ndarray:
        """Unnormalised weighted Gini decrease per feature."""
        out = np.zeros(self.n_features_)
        for i in np.flatnonzero(self.feature_ >= 0):
            l, r = self.left_[i], self.right_[i]
            out[self.feature_[i]] += (
                self.n_node_[i] * self.impurity_[i]
                - self.n_node_[l] * self.impurity_[l]
                - self.n_node_[r] * self.impurity_[r]
            )
        return out / self.n_node_[0]

    def feature_importances(self) -> np.ndarray:
        raw = self.impurity_decrease()
        total = raw.sum()
        return raw / total if total > 0 else raw

    def get_params(self) -> dict:
        return {
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "criterion": self.criterion,
            "max_features": self.max_features,
            "n_classes": self.n_classes,
            "seed": self.seed,
        }

    def arrays(self) -> dict[str, np.ndarray]:
        return {
            "feature": self.feature_,
            "threshold": self.threshold_,
            "left": self.left_,
            "right": self.right_,
            "value": self.value_,
            "impurity": self.impurity_,
            "n_node": self.n_node_,
            "n_features": np.array([self.n_features_], dtype=np.int64),
        }

    @classmethod
    def from_arrays(cls, params: dict, arrays: dict) -> "DecisionTree":
        tree = cls(**params)
        tree.feature_ = arrays["feature"].astype(np.int64)
        tree.threshold_ = arrays["threshold"]
        tree.left_ = arrays["left"].astype(np.int64)
        tree.right_ = arrays["right"].astype(np.int64)
        tree.value_ = arrays["value"]
        tree.impurity_ = arrays["impurity"]
        tree.n_node_ = arrays["n_node"]
        tree.n_features_ = int(arrays["n_features"][0])
        return tree


class RandomForest:
    """Bootstrap forest of Gini trees with ceil(sqrt(d)) candidate features per split."""

    kind = "random_forest"

    def __init__(
        self,
        n_estimators: int = 10,
        max_depth: int = 4,
        min_samples_split: int = 3,
        seed: int = 0,
        n_classes: int = 3,
    ):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.seed = seed
        self.n_classes = n_classes
        self.trees_: list[DecisionTree] = []

    def fit(self, X: np.ndarray, y: np.ndarray) -> "RandomForest":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        n, d = X.shape
        max_features = max(1, math.ceil(math.sqrt(d)))
        self.trees_ = []
        for child in np.random.SeedSequence(self.seed).spawn(self.n_estimators):
            rng = np.random.default_rng(child)
            boot = rng.integers(0, n, size=n)
            tree = DecisionTree(self.max_depth, self.min_samples_split, "gini", max_features, self.n_classes)
            self.trees_.append(tree.fit(X[boot], y[boot], rng))
        return self

    @property
    def fitted(self) -> bool:
        return bool(self.trees_)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        if not self.trees_:
            raise RuntimeError("forest is not trained")
        return np.mean([t.predict_proba(X) for t in self.trees_], axis=0)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.predict_proba(X).argmax(axis=1)

    def feature_importances(self) -> np.ndarray:
        """Mean decrease in Gini impurity, per-tree normalised, averaged and renormalised."""
        if not self.trees_:
            raise RuntimeError("forest is not trained")
        per_tree = [t.feature_importances() for t in self.trees_ if t.impurity_decrease().sum() > 0]
        if not per_tree:
            return np.zeros(self.trees_[0].n_features_)
        mean = np.mean(per_tree, axis=0)
        return mean / mean.sum()

    def get_params(self) -> dict:
        return {
            "n_estimators": self.n_estimators,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "seed": self.seed,
            "n_classes": self.n_classes,
        }

    def arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for i, tree in enumerate(self.trees_):
            for k, v in tree.arrays().items():
                out[f"tree{i}.{k}"] = v
        return out

    @classmethod
    def from_arrays(cls, params: dict, arrays: dict) -> "RandomForest":
        forest = cls(**params)
        max_features = None
        for i in range(forest.n_estimators):
            sub = {k.split(".", 1)[1]: v for k, v in arrays.items() if k.startswith(f"tree{i}.")}
            tree_params = {
                "max_depth": forest.max_depth,
                "min_samples_split": forest.min_samples_split,
                "criterion": "gini",
                "max_features": max_features,
                "n_classes": forest.n_classes,
            }
            forest.trees_.append(DecisionTree.from_arrays(tree_params, sub))
        return forest


def train_decision_tree(X, y, max_depth: int = 6, min_samples_split: int = 3, criterion: str = "gini") -> DecisionTree:
    return DecisionTree(max_depth, min_samples_split, criterion).fit(X, y)


def train_random_forest(
    X, y, n_estimators: int = 10, max_depth: int = 4, min_samples_split: int = 3, seed: int = 0
) -> RandomForest:
    return RandomForest(n_estimators, max_depth, min_samples_split, seed).fit(X, y)
