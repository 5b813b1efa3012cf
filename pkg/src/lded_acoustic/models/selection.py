"""Stratified k-fold cross-validated grid search."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


def stratified_kfold(y: np.ndarray, folds: int, seed: int = 0) -> list[np.ndarray]:
    """Test-index arrays for ``folds`` stratified folds (class rows dealt round-robin after shuffling)."""
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if counts.min() < folds:
        raise ValueError(f"{folds} folds exceed the smallest class size {counts.min()}")
    rng = np.random.default_rng(seed)
    buckets: list[list[int]] = [[] for _ in range(folds)]
    offset = 0
    for c in classes:
        rows = rng.permutation(np.flatnonzero(y == c))
        for i, r in enumerate(rows):
            buckets[(i + offset) % folds].append(int(r))
        offset += len(rows)
    return [np.sort(np.array(b, dtype=np.int64)) for b in buckets]


@dataclass
class GridSearchResult:
    best_params: dict
    best_score: float
    cells: list[dict]
    table: list[dict]  # one row per (cell, fold)


def expand_grid(grid: dict[str, list]) -> list[dict]:
    if not grid:
        return [{}]
    keys = list(grid)
    return [dict(zip(keys, values)) for values in itertools.product(*(grid[k] for k in keys))]


def grid_search_cv(family, grid: dict[str, list], X: np.ndarray, y: np.ndarray, folds: int = 5, seed: int = 0) -> GridSearchResult:
    """Exhaustive grid search scored by mean stratified k-fold accuracy.

    ``family`` is a model-family name or a callable ``(params, X, y, seed) -> model``.
    Ties keep the earliest cell in grid order.
    """
    from .classic import fit_classic

    cells = expand_grid(grid)
    if not cells:
        raise ValueError("empty grid")
    if isinstance(family, str):
        name = family

        def fit(params, Xf, yf, s):
            return fit_classic(name, Xf, yf, params, seed=s)
    else:
        fit = family
    X = np.asarray(X)
    y = np.asarray(y)
    test_folds = stratified_kfold(y, folds, seed)
    table = []
    best_i, best_score = 0, -np.inf
    for ci, params in enumerate(cells):
        scores = []
        for fi, test_idx in enumerate(test_folds):
            train_mask = np.ones(y.shape[0], dtype=bool)
            train_mask[test_idx] = False
            model = fit(params, X[train_mask], y[train_mask], seed)
            acc = float(np.mean(model.predict(X[test_idx]) == y[test_idx]))
            scores.append(acc)
            table.append({"cell": ci, "fold": fi, "params": params, "accuracy": acc})
        mean = float(np.mean(scores))
        if mean > best_score:
            best_i, best_score = ci, mean
    return GridSearchResult(cells[best_i], best_score, cells, table)
