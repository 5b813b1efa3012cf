from __future__ import annotations

import numpy as np


class KNeighbors:
    """Euclidean k-NN with 1/d vote weights; a zero-distance neighbour wins outright."""

    kind = "knn"

    def __init__(self, k: int = 4, weighting: str = "distance", n_classes: int = 3):
        if weighting not in ("distance", "uniform"):
            raise ValueError(f"unknown weighting {weighting!r}")
        self.k = k
        self.weighting = weighting
        self.n_classes = n_classes
        self.X_: np.ndarray | None = None
        self.y_: np.ndarray | None = None

    def fit(self, X: np.ndarray, y: np.ndarray) -> "KNeighbors":
        X = np.asarray(X, dtype=np.float64)
        if self.k > X.shape[0]:
            raise ValueError(f"k={self.k} exceeds the {X.shape[0]} training rows")
        self.X_, self.y_ = X, np.asarray(y, dtype=np.int64)
        return self

    def _distances(self, Q: np.ndarray, chunk: int = 256) -> np.ndarray:
        # direct differences so identical rows give exactly zero
        out = np.empty((Q.shape[0], self.X_.shape[0]))
        for i in range(0, Q.shape[0], chunk):
            diff = Q[i : i + chunk, None, :] - self.X_[None, :, :]
            out[i : i + chunk] = np.sqrt(np.sum(diff * diff, axis=2))
        return out

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        Q = np.asarray(X, dtype=np.float64)
        dist = self._distances(Q)
        # stable sort keeps the lowest training index among equal distances
        idx = np.argsort(dist, axis=1, kind="stable")[:, : self.k]
        d = np.take_along_axis(dist, idx, axis=1)
        labels = self.y_[idx]
        if self.weighting == "uniform":
            w = np.ones_like(d)
        else:
            exact = d == 0
            with np.errstate(divide="ignore"):
                w = np.where(exact.any(axis=1, keepdims=True), exact.astype(float), 1.0 / d)
        proba = np.zeros((Q.shape[0], self.n_classes))
        for c in range(self.n_classes):
            proba[:, c] = np.sum(w * (labels == c), axis=1)
        return proba / proba.sum(axis=1, keepdims=True)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.predict_proba(X).argmax(axis=1)

    def get_params(self) -> dict:
        return {"k": self.k, "weighting": self.weighting, "n_classes": self.n_classes}

    def arrays(self) -> dict[str, np.ndarray]:
        return {"X": self.X_, "y": self.y_}

    @classmethod
    def from_arrays(cls, params: dict, arrays: dict) -> "KNeighbors":
        model = cls(**params)
        model.X_, model.y_ = arrays["X"], arrays["y"].astype(np.int64)
        return model


def knn_predict(X_train, y_train, query, k: int = 4, weighting: str = "distance"):
    model = KNeighbors(k, weighting).fit(X_train, y_train)
    proba = model.predict_proba(np.atleast_2d(query))
    return proba.argmax(axis=1), proba
