"""Feature analysis: Spearman correlation, PCA, forest importance and the stratified split."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .models.tree import RandomForest

LABEL_COLUMN = "output class"


@dataclass
class FeatureTable:
    columns: list[str]
    X: np.ndarray
    labels: np.ndarray
    meta: list[dict] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.columns = list(self.columns)
        if self.X.ndim != 2 or self.X.shape[1] != len(self.columns):
            raise ValueError("feature matrix does not match the column list")
        if self.labels.shape[0] != self.X.shape[0]:
            raise ValueError("one label per row is required")
        if self.labels.size and not np.all(np.isin(self.labels, (0, 1, 2))):
            raise ValueError("labels must be 0, 1 or 2")

    def __len__(self) -> int:
        return self.X.shape[0]

    def select(self, names) -> "FeatureTable":
        idx = [self.columns.index(n) for n in names]
        return FeatureTable(list(names), self.X[:, idx], self.labels, self.meta)

    def subset(self, rows: np.ndarray) -> "FeatureTable":
        meta = [self.meta[i] for i in rows] if self.meta else []
        return FeatureTable(self.columns, self.X[rows], self.labels[rows], meta)


# ------------------------------------------------------------------ Spearman


def average_ranks(x) -> np.ndarray:
    """1-based ranks; tied values share the mean of their positions."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    ranks = np.empty(x.shape[0])
    start = 0
    n = x.shape[0]
    while start < n:
        stop = start + 1
        while stop < n and xs[stop] == xs[start]:
            stop += 1
        ranks[order[start:stop]] = 0.5 * (start + stop - 1) + 1.0
        start = stop
    return ranks


def spearman(x, y) -> float | None:
    """Spearman rank correlation, or ``None`` when a column is constant.

    Without ties this is 1 - 6*sum(d^2)/(n(n^2-1)); with ties it is the Pearson
    correlation of the average ranks.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("spearman needs two 1-D sequences of equal length")
    n = x.shape[0]
    if n < 2:
        raise ValueError("spearman needs at least two points")
    if np.all(x == x[0]) or np.all(y == y[0]):
        return None
    rx, ry = average_ranks(x), average_ranks(y)
    tied = np.unique(x).shape[0] < n or np.unique(y).shape[0] < n
    if not tied:
        d = rx - ry
        return float(1.0 - 6.0 * np.sum(d * d) / (n * (n * n - 1.0)))
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    return float(np.sum(rx * ry) / math.sqrt(np.sum(rx * rx) * np.sum(ry * ry)))


@dataclass
class CorrelationMatrix:
    columns: list[str]
    values: np.ndarray  # NaN where undefined
    defined: np.ndarray  # bool mask

    def get(self, a: str, b: str) -> float | None:
        i, j = self.columns.index(a), self.columns.index(b)
        return float(self.values[i, j]) if self.defined[i, j] else None


def correlation_matrix(table: FeatureTable, include_label: bool = True) -> CorrelationMatrix:
    """Pairwise Spearman over all feature columns plus the class label."""
    if len(table) < 2:
        raise ValueError("correlation needs at least two rows")
    cols = list(table.columns)
    data = [table.X[:, i] for i in range(table.X.shape[1])]
    if include_label:
        cols.append(LABEL_COLUMN)
        data.append(table.labels.astype(np.float64))
    k = len(cols)
    values = np.full((k, k), np.nan)
    defined = np.zeros((k, k), dtype=bool)
    for i in range(k):
        for j in range(i, k):
            r = spearman(data[i], data[j])
            if r is not None:
                if i == j:
                    r = 1.0
                values[i, j] = values[j, i] = r
                defined[i, j] = defined[j, i] = True
    return CorrelationMatrix(cols, values, defined)


# ------------------------------------------------------------------ PCA


def jacobi_eigh(a: np.ndarray, tol: float = 1e-10, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors as columns), unsorted.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    scale = max(np.linalg.norm(a), 1.0)
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        warnings.warn("Jacobi eigen-solver hit the sweep limit", RuntimeWarning, stacklevel=2)
    return np.diag(a).copy(), v


@dataclass
class PcaResult:
    projection: np.ndarray  # (n, k)
    components: np.ndarray  # (d_kept, k), orthonormal columns
    explained_variance_ratio: np.ndarray  # (k,)
    eigenvalues: np.ndarray  # all, descending
    kept_columns: list[str]


def pca_project(table: FeatureTable, k: int = 2) -> PcaResult:
    """Project standardised features onto the top-k principal axes.

    Constant columns are dropped with a warning. Each component is signed so its
    largest-magnitude loading is positive.
    """
    X = table.X
    if X.shape[0] <= k:
        raise ValueError(f"need more than {k} rows for {k} components")
    std = X.std(axis=0)
    keep = std > 0
    if not keep.all():
        dropped = [c for c, kp in zip(table.columns, keep) if not kp]
        warnings.warn(f"dropping constant columns from PCA: {dropped}", RuntimeWarning, stacklevel=2)
    Z = (X[:, keep] - X[:, keep].mean(axis=0)) / std[keep]
    cov = Z.T @ Z / Z.shape[0]
    vals, vecs = jacobi_eigh(cov)
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    vals = np.maximum(vals, 0.0)
    rank = int(np.sum(vals > 1e-10 * max(vals[0], 1e-300)))
    if k > rank:
        raise ValueError(f"k={k} exceeds the rank {rank} of the standardised features")
    comps = vecs[:, :k].copy()
    for j in range(k):
        if comps[np.argmax(np.abs(comps[:, j])), j] < 0:
            comps[:, j] = -comps[:, j]
    return PcaResult(
        projection=Z @ comps,
        components=comps,
        explained_variance_ratio=vals[:k] / vals.sum(),
        eigenvalues=vals,
        kept_columns=[c for c, kp in zip(table.columns, keep) if kp],
    )


# ------------------------------------------------------------------ importance


def rf_feature_importance(table: FeatureTable, forest: RandomForest | None = None, **forest_params) -> dict[str, float]:
    """Mean decrease in Gini impurity per column, summing to one.

    Trains a forest with the given parameters unless a fitted one is passed.
    """
    if forest is None:
        forest = RandomForest(**forest_params).fit(table.X, table.labels)
    if not forest.fitted:
        raise RuntimeError("forest is not trained")
    imp = forest.feature_importances()
    return dict(zip(table.columns, imp.tolist()))


# ------------------------------------------------------------------ split


def stratified_split(labels, test_fraction: float = 0.2, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Shuffled train/test row indices preserving class proportions.

    The test size is ceil(test_fraction * n), shared out over classes by largest
    remainder so each class is within one row of its proportional share.
    """
    labels = np.asarray(labels)
    classes, counts = np.unique(labels, return_counts=True)
    if np.any(counts < 2):
        small = classes[counts < 2].tolist()
        raise ValueError(f"classes {small} have fewer than 2 rows")
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    n = labels.shape[0]
    n_test = int(math.ceil(test_fraction * n))
    exact = counts * n_test / n
    alloc = np.floor(exact).astype(np.int64)
    remainder = n_test - int(alloc.sum())
    if remainder > 0:
        order = np.lexsort((classes, -(exact - alloc)))
        alloc[order[:remainder]] += 1
    alloc = np.clip(alloc, 1, counts - 1)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c, m in zip(classes, alloc):
        rows = rng.permutation(np.flatnonzero(labels == c))
        test.append(rows[:m])
        train.append(rows[m:])
    train_idx = rng.permutation(np.concatenate(train))
    test_idx = rng.permutation(np.concatenate(test))
    return train_idx, test_idx


def split_table(table: FeatureTable, test_fraction: float = 0.2, seed: int = 0) -> tuple[FeatureTable, FeatureTable]:
    tr, te = stratified_split(table.labels, test_fraction, seed)
    return table.subset(tr), table.subset(te)


# ------------------------------------------------------------------ CSV


def write_matrix_csv(path: str | Path, row_names, col_names, values, defined=None, header_comment: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh)
        w.writerow([""] + list(col_names))
        for i, name in enumerate(row_names):
            row = []
            for j in range(len(col_names)):
                ok = True if defined is None else bool(defined[i][j])
                row.append(repr(float(values[i][j])) if ok else "undefined")
            w.writerow([name] + row)
