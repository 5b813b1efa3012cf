from __future__ import annotations

import numpy as np
from scipy.special import logsumexp


class GaussianNB:
    """Gaussian naive Bayes; variances are smoothed by ``var_smoothing`` times the largest feature variance."""

    kind = "gaussian_nb"

    def __init__(self, var_smoothing: float = 1e-9, n_classes: int = 3):
        self.var_smoothing = var_smoothing
        self.n_classes = n_classes
        self.theta_: np.ndarray | None = None
        self.var_: np.ndarray | None = None
        self.log_prior_: np.ndarray | None = None

    def fit(self, X: np.ndarray, y: np.ndarray) -> "GaussianNB":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        missing = [c for c in range(self.n_classes) if not np.any(y == c)]
        if missing:
            raise ValueError(f"classes {missing} have no training rows")
        eps = self.var_smoothing * float(np.var(X, axis=0).max())
        self.theta_ = np.stack([X[y == c].mean(axis=0) for c in range(self.n_classes)])
        self.var_ = np.stack([X[y == c].var(axis=0) for c in range(self.n_classes)]) + eps
        if np.any(self.var_ <= 0):
            # all features constant: fall back to a unit scale
            self.var_ = np.where(self.var_ <= 0, 1.0, self.var_)
        counts = np.array([np.sum(y == c) for c in range(self.n_classes)], dtype=np.float64)
        self.log_prior_ = np.log(counts / counts.sum())
        return self

    def joint_log_likelihood(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        ll = -0.5 * np.sum(np.log(2.0 * np.pi * self.var_), axis=1)[None, :]
        ll = ll - 0.5 * np.sum((X[:, None, :] - self.theta_[None]) ** 2 / self.var_[None], axis=2)
        return ll + self.log_prior_

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        return np.exp(jll - logsumexp(jll, axis=1, keepdims=True))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.predict_proba(X).argmax(axis=1)

    def get_params(self) -> dict:
        return {"var_smoothing": self.var_smoothing, "n_classes": self.n_classes}

    def arrays(self) -> dict[str, np.ndarray]:
        return {"theta": self.theta_, "var": self.var_, "log_prior": self.log_prior_}

    @classmethod
    def from_arrays(cls, params: dict, arrays: dict) -> "GaussianNB":
        model = cls(**params)
        model.theta_, model.var_, model.log_prior_ = arrays["theta"], arrays["var"], arrays["log_prior"]
        return model


def train_gaussian_nb(X, y, var_smoothing: float = 1e-9) -> GaussianNB:
    return GaussianNB(var_smoothing).fit(X, y)
