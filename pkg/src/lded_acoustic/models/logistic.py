from __future__ import annotations

import warnings

import numpy as np
from scipy.special import logsumexp, softmax


class ConvergenceWarning(UserWarning):
    pass


class LogisticRegression:
    """Multinomial softmax regression with an L2 penalty on the weights (not the intercepts).

    Objective: mean cross-entropy + 0.5 * l2 * ||W||^2, minimised by full-batch
    gradient descent with Armijo backtracking until the gradient norm is below ``tol``.
    """

    kind = "logistic"

    def __init__(self, l2: float = 1e-3, max_iter: int = 5000, tol: float = 1e-6, n_classes: int = 3):
        self.l2 = l2
        self.max_iter = max_iter
        self.tol = tol
        self.n_classes = n_classes
        self.coef_: np.ndarray | None = None  # (d, C)
        self.intercept_: np.ndarray | None = None  # (C,)
        self.converged_ = False
        self.n_iter_ = 0
        self.grad_norm_ = np.inf

    @staticmethod
    def _unpack(theta: np.ndarray, d: int, c: int) -> tuple[np.ndarray, np.ndarray]:
        return theta[: d * c].reshape(d, c), theta[d * c :]

    def objective(self, theta: np.ndarray, X: np.ndarray, Y: np.ndarray) -> tuple[float, np.ndarray]:
        """Loss and gradient at the flat parameter vector ``theta`` (weights then intercepts)."""
        n, d = X.shape
        W, b = self._unpack(theta, d, self.n_classes)
        logits = X @ W + b
        lse = logsumexp(logits, axis=1)
        loss = float(np.mean(lse - np.sum(Y * logits, axis=1)) + 0.5 * self.l2 * np.sum(W * W))
        delta = (np.exp(logits - lse[:, None]) - Y) / n
        grad = np.concatenate([(X.T @ delta + self.l2 * W).ravel(), delta.sum(axis=0)])
        return loss, grad

    def fit(self, X: np.ndarray, y: np.ndarray) -> "LogisticRegression":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        d = X.shape[1]
        Y = np.eye(self.n_classes)[y]
        theta = np.zeros(d * self.n_classes + self.n_classes)
        loss, grad = self.objective(theta, X, Y)
        step = 1.0
        for it in range(self.max_iter):
            gnorm = float(np.linalg.norm(grad))
            if gnorm < self.tol:
                self.converged_ = True
                break
            while True:
                cand = theta - step * grad
                cand_loss, cand_grad = self.objective(cand, X, Y)
                if cand_loss <= loss - 0.5 * step * gnorm**2 or step < 1e-12:
                    break
                step *= 0.5
            theta, loss, grad = cand, cand_loss, cand_grad
            step *= 2.0
        else:
            gnorm = float(np.linalg.norm(grad))
            self.converged_ = gnorm < self.tol
        self.n_iter_ = it + 1
        self.grad_norm_ = float(np.linalg.norm(grad))
        if not self.converged_:
            warnings.warn(
                f"logistic regression stopped after {self.max_iter} iterations "
                f"with gradient norm {self.grad_norm_:.3g}",
                ConvergenceWarning,
                stacklevel=2,
            )
        self.coef_, self.intercept_ = self._unpack(theta, d, self.n_classes)
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(np.asarray(X, dtype=np.float64) @ self.coef_ + self.intercept_, axis=1)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.predict_proba(X).argmax(axis=1)

    def get_params(self) -> dict:
        return {"l2": self.l2, "max_iter": self.max_iter, "tol": self.tol, "n_classes": self.n_classes}

    def arrays(self) -> dict[str, np.ndarray]:
        return {"coef": self.coef_, "intercept": self.intercept_}

    @classmethod
    def from_arrays(cls, params: dict, arrays: dict) -> "LogisticRegression":
        model = cls(**params)
        model.coef_, model.intercept_ = arrays["coef"], arrays["intercept"]
        return model


def train_logistic(X, y, l2: float = 1e-3, max_iter: int = 5000, tol: float = 1e-6) -> LogisticRegression:
    return LogisticRegression(l2, max_iter, tol).fit(X, y)
