import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lded_acoustic.analysis import (
    LABEL_COLUMN,
    FeatureTable,
    average_ranks,
    correlation_matrix,
    jacobi_eigh,
    pca_project,
    rf_feature_importance,
    spearman,
    split_table,
    stratified_split,
    write_matrix_csv,
)


def count_ranks(x):
    """Rank of each value = number strictly below it plus the mean position among its ties."""
    return [sum(v < xi for v in x) + (sum(v == xi for v in x) + 1) / 2 for xi in x]


def pearson(a, b):
    ma, mb = math.fsum(a) / len(a), math.fsum(b) / len(b)
    num = math.fsum((p - ma) * (q - mb) for p, q in zip(a, b))
    den = math.sqrt(math.fsum((p - ma) ** 2 for p in a) * math.fsum((q - mb) ** 2 for q in b))
    return num / den


def rank_pearson(x, y):
    return pearson(count_ranks(list(x)), count_ranks(list(y)))


def table(X, labels=None, cols=None):
    X = np.asarray(X, float)
    labels = np.zeros(X.shape[0], int) if labels is None else labels
    return FeatureTable(cols or [f"f{i}" for i in range(X.shape[1])], X, labels)


# ---- Spearman --------------------------------------------------------------


def test_spearman_monotone_examples():
    x = np.arange(10.0)
    assert spearman(x, x**3) == 1.0
    assert spearman(x, x[::-1]) == -1.0
    assert spearman(x, np.ones(10)) is None


def test_spearman_with_ties_matches_oracle():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(3, 60))
        x = rng.integers(0, 6, n).astype(float)
        y = rng.integers(0, 4, n) + 0.5 * x
        if np.all(x == x[0]) or np.all(y == y[0]):
            continue
        assert abs(spearman(x, y) - rank_pearson(x, y)) < 1e-12


def test_spearman_without_ties_matches_oracle():
    rng = np.random.default_rng(1)
    for _ in range(100):
        x, y = rng.standard_normal((2, 40))
        assert abs(spearman(x, y) - rank_pearson(x, y)) < 1e-12


def test_average_ranks():
    assert average_ranks([10.0, 20.0, 10.0, 5.0]).tolist() == [2.5, 4.0, 2.5, 1.0]


@given(seed=st.integers(0, 2**31 - 1))
def test_spearman_invariant_to_monotone_maps(seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(30)
    y = x + rng.standard_normal(30)
    r = spearman(x, y)
    assert spearman(np.exp(x), y) == pytest.approx(r, abs=1e-12)
    assert spearman(x, y**3) == pytest.approx(r, abs=1e-12)


# ---- correlation matrix ----------------------------------------------------


def test_correlation_matrix_properties():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((50, 3))
    X = np.column_stack([X, X[:, 0], np.ones(50)])
    labels = rng.integers(0, 3, 50)
    cm = correlation_matrix(table(X, labels))
    assert cm.columns[-1] == LABEL_COLUMN
    assert cm.get("f0", "f3") == pytest.approx(1.0)
    assert cm.get("f4", "f1") is None and cm.get("f4", "f4") is None
    v = np.where(cm.defined, cm.values, 0)
    assert np.array_equal(v, v.T)
    for i in range(4):
        assert cm.values[i, i] == 1.0
    for i in range(4):
        for j in range(4):
            assert cm.values[i, j] == pytest.approx(rank_pearson(X[:, i], X[:, j]), abs=1e-12)
    assert cm.get("f1", LABEL_COLUMN) == pytest.approx(rank_pearson(X[:, 1], labels), abs=1e-12)


def test_correlation_csv(tmp_path):
    cm = correlation_matrix(table(np.column_stack([np.arange(5.0), np.ones(5)])), include_label=False)
    path = tmp_path / "c.csv"
    write_matrix_csv(path, cm.columns, cm.columns, cm.values, cm.defined, "config_hash=abc")
    lines = path.read_text().splitlines()
    assert lines[0] == "# config_hash=abc"
    assert lines[1] == ",f0,f1"
    assert lines[3] == "f1,undefined,undefined"


# ---- PCA -------------------------------------------------------------------


def test_jacobi_matches_dense_solver():
    rng = np.random.default_rng(3)
    for d in (2, 7, 30):
        a = rng.standard_normal((d, d))
        a = a @ a.T
        vals, vecs = jacobi_eigh(a)
        np.testing.assert_allclose(np.sort(vals), np.linalg.eigvalsh(a), rtol=1e-9, atol=1e-9)
        np.testing.assert_allclose(a @ vecs, vecs * vals, atol=1e-8)


def test_pca_matches_dense_eigensolver():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((200, 30)) @ rng.standard_normal((30, 30))
    res = pca_project(table(X), k=3)
    Z = (X - X.mean(0)) / X.std(0)
    ev = np.linalg.eigvalsh(Z.T @ Z / len(Z))[::-1]
    np.testing.assert_allclose(res.explained_variance_ratio, ev[:3] / ev.sum(), atol=1e-8)
    np.testing.assert_allclose(res.components.T @ res.components, np.eye(3), atol=1e-9)
    assert res.explained_variance_ratio.sum() <= 1.0
    for j in range(3):
        c = res.components[:, j]
        assert c[np.argmax(np.abs(c))] > 0
    np.testing.assert_allclose(res.projection, Z @ res.components, atol=1e-12)


def test_pca_line_is_rank_one():
    t = np.linspace(-1, 1, 50)
    X = np.column_stack([t, 3 * t + 1, np.random.default_rng(0).normal(0, 1e-4, 50)])
    assert pca_project(table(X), k=1).explained_variance_ratio[0] >= 0.6
    X2 = np.column_stack([t, -2 * t])
    assert pca_project(table(X2), k=1).explained_variance_ratio[0] >= 0.999


def test_pca_drops_constant_columns_with_warning():
    X = np.column_stack([np.random.default_rng(5).standard_normal((20, 3)), np.full(20, 4.0)])
    with pytest.warns(RuntimeWarning):
        res = pca_project(table(X))
    assert res.kept_columns == ["f0", "f1", "f2"]


def test_pca_rank_and_size_errors():
    t = np.arange(10.0)
    with pytest.raises(ValueError):
        pca_project(table(np.column_stack([t, 2 * t])), k=2)
    with pytest.raises(ValueError):
        pca_project(table(np.ones((2, 3)) + np.eye(2, 3)), k=2)


# ---- feature importance ----------------------------------------------------


def test_importance_finds_separating_feature():
    rng = np.random.default_rng(6)
    labels = np.repeat([0, 1, 2], 60)
    X = rng.standard_normal((180, 5))
    X[:, 2] = labels * 10 + rng.uniform(0, 1, 180)
    X[:, 4] = 1.0  # never usable for a split
    imp = rf_feature_importance(table(X, labels), seed=0)
    assert imp["f2"] > 0.9
    assert sum(imp.values()) == pytest.approx(1.0, abs=1e-9)
    assert imp["f4"] == 0.0


# ---- split -----------------------------------------------------------------


def test_balanced_split():
    labels = np.repeat([0, 1, 2], 100)
    tr, te = stratified_split(labels, 0.2, seed=0)
    assert np.bincount(labels[te]).tolist() == [20, 20, 20]
    assert sorted(np.concatenate([tr, te]).tolist()) == list(range(300))


def test_split_deterministic():
    labels = np.repeat([0, 1, 2], [650, 350, 300])
    a, b = stratified_split(labels, 0.2, 7), stratified_split(labels, 0.2, 7)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert not np.array_equal(a[1], stratified_split(labels, 0.2, 8)[1])


@given(
    counts=st.lists(st.integers(2, 700), min_size=2, max_size=3),
    frac=st.floats(0.05, 0.5),
    seed=st.integers(0, 1000),
)
def test_split_proportions_within_one_row(counts, frac, seed):
    labels = np.repeat(np.arange(len(counts)), counts)
    tr, te = stratified_split(labels, frac, seed)
    assert len(set(tr) & set(te)) == 0 and len(tr) + len(te) == len(labels)
    got = np.bincount(labels[te], minlength=len(counts))
    want = np.array(counts) * len(te) / len(labels)
    assert np.all(np.abs(got - want) <= 1.0 + 1e-9) or np.any(np.array(counts) * frac < 1)


def test_imbalanced_corpus_split():
    labels = np.repeat([0, 1, 2], [650, 350, 300])
    tr, te = stratified_split(labels, 0.2, 3)
    got = np.bincount(labels[te])
    assert np.all(np.abs(got - np.array([650, 350, 300]) * 0.2) <= 1)


def test_split_errors_and_tables():
    with pytest.raises(ValueError):
        stratified_split([0, 0, 1], 0.2)
    with pytest.raises(ValueError):
        stratified_split([0, 0, 1, 1], 1.5)
    t = table(np.arange(20.0)[:, None], np.repeat([0, 1], 10))
    a, b = split_table(t, 0.2, 0)
    assert len(a) == 16 and len(b) == 4
