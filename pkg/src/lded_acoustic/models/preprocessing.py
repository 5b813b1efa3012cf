from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STD_FLOOR = 1e-12


@dataclass
class Standardizer:
    """Per-column zero-mean / unit-variance scaling learned from training rows only."""

    mean: np.ndarray | None = None
    std: np.ndarray | None = None

    def fit(self, train: np.ndarray) -> "Standardizer":
        train = np.asarray(train, dtype=np.float64)
        if train.ndim != 2 or train.shape[0] == 0:
            raise ValueError("cannot fit a standardizer on an empty training set")
        self.mean = train.mean(axis=0)
        self.std = np.maximum(train.std(axis=0), STD_FLOOR)
        return self

    def transform(self, rows: np.ndarray) -> np.ndarray:
        if self.mean is None:
            raise RuntimeError("standardizer is not fitted")
        return (np.asarray(rows, dtype=np.float64) - self.mean) / self.std

    def fit_transform(self, train: np.ndarray) -> np.ndarray:
        return self.fit(train).transform(train)


def fit_standardizer(train: np.ndarray) -> Standardizer:
    return Standardizer().fit(train)


def apply_standardizer(standardizer: Standardizer, rows: np.ndarray) -> np.ndarray:
    return standardizer.transform(rows)
