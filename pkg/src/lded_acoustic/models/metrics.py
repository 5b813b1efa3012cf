"""Accuracy, confusion matrix, one-vs-rest ROC/AUC and the defect false-positive rate."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CLASS_NAMES = ("defect-free", "cracks", "keyhole pores")


def accuracy(y_true, y_pred) -> float:
    y_true, y_pred = np.asarray(y_true), np.asarray(y_pred)
    if y_true.shape[0] == 0:
        raise ValueError("empty test set")
    return float(np.sum(y_true == y_pred)) / y_true.shape[0]


def confusion_matrix(y_true, y_pred, n_classes: int = 3) -> np.ndarray:
    """Rows are true classes, columns predicted."""
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(y_true), np.asarray(y_pred)), 1)
    return cm


def roc_curve(labels, scores) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(fpr, tpr, thresholds) with one point per distinct score, starting at (0, 0)."""
    labels = np.asarray(labels).astype(bool)
    scores = np.asarray(scores, dtype=np.float64)
    order = np.argsort(-scores, kind="stable")
    s, l = scores[order], labels[order]
    last_of_run = np.r_[s[1:] != s[:-1], True]
    tp = np.cumsum(l)[last_of_run]
    fp = np.cumsum(~l)[last_of_run]
    P, N = int(labels.sum()), int((~labels).sum())
    tpr = np.r_[0, tp] / P if P else np.full(tp.shape[0] + 1, np.nan)
    fpr = np.r_[0, fp] / N if N else np.full(fp.shape[0] + 1, np.nan)
    return fpr, tpr, np.r_[np.inf, s[last_of_run]]


def roc_auc(labels, scores) -> float | None:
    """Trapezoidal area under the ROC curve; ``None`` if only one class is present.

    The area is accumulated in integer counts and divided once, so it equals the
    pairwise concordance (ties count one half) exactly.
    """
    labels = np.asarray(labels).astype(bool)
    scores = np.asarray(scores, dtype=np.float64)
    P, N = int(labels.sum()), int((~labels).sum())
    if P == 0 or N == 0:
        return None
    order = np.argsort(-scores, kind="stable")
    s, l = scores[order], labels[order]
    last_of_run = np.r_[s[1:] != s[:-1], True]
    tp = np.r_[0, np.cumsum(l)[last_of_run]].astype(np.int64)
    fp = np.r_[0, np.cumsum(~l)[last_of_run]].astype(np.int64)
    twice_area = int(np.sum(np.diff(fp) * (tp[1:] + tp[:-1])))
    return twice_area / (2.0 * P * N)


def defect_false_positive_rate(y_true, y_pred, clean_class: int = 0) -> float | None:
    """Share of true defect rows (any class but ``clean_class``) predicted as clean."""
    y_true, y_pred = np.asarray(y_true), np.asarray(y_pred)
    defect = y_true != clean_class
    if not defect.any():
        return None
    return float(np.sum(y_pred[defect] == clean_class)) / int(defect.sum())


@dataclass
class Metrics:
    accuracy: float
    confusion: np.ndarray
    per_class_auc: list[float | None]
    macro_auc: float | None
    false_positive_rate: float | None
    per_class_accuracy: list[float | None] = field(default_factory=list)
    roc: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "confusion": self.confusion.tolist(),
            "per_class_auc": self.per_class_auc,
            "macro_auc": self.macro_auc,
            "false_positive_rate": self.false_positive_rate,
            "per_class_accuracy": self.per_class_accuracy,
        }


def compute_metrics(y_true, proba, n_classes: int = 3) -> Metrics:
    y_true = np.asarray(y_true, dtype=np.int64)
    proba = np.asarray(proba, dtype=np.float64)
    if y_true.shape[0] == 0:
        raise ValueError("empty test set")
    if proba.shape != (y_true.shape[0], n_classes):
        raise ValueError(f"probabilities shaped {proba.shape}, expected {(y_true.shape[0], n_classes)}")
    y_pred = proba.argmax(axis=1)
    cm = confusion_matrix(y_true, y_pred, n_classes)
    aucs = [roc_auc(y_true == c, proba[:, c]) for c in range(n_classes)]
    defined = [a for a in aucs if a is not None]
    rows = cm.sum(axis=1)
    return Metrics(
        accuracy=accuracy(y_true, y_pred),
        confusion=cm,
        per_class_auc=aucs,
        macro_auc=float(np.mean(defined)) if defined else None,
        false_positive_rate=defect_false_positive_rate(y_true, y_pred),
        per_class_accuracy=[float(cm[c, c] / rows[c]) if rows[c] else None for c in range(n_classes)],
        roc=[roc_curve(y_true == c, proba[:, c])[:2] for c in range(n_classes)],
    )


def evaluate(model, X_test, y_test) -> Metrics:
    """Score a fitted model exposing ``predict_proba`` on a held-out set."""
    if len(y_test) == 0:
        raise ValueError("empty test set")
    return compute_metrics(y_test, model.predict_proba(X_test), getattr(model, "n_classes", 3))


def summarize_runs(runs: list[Metrics]) -> dict:
    """Mean and population std of every scalar metric across runs, plus the per-run values."""
    def stats(values):
        vals = [v for v in values if v is not None]
        if not vals:
            return {"mean": None, "std": None}
        return {"mean": float(np.mean(vals)), "std": float(np.std(vals))}

    n_classes = runs[0].confusion.shape[0]
    return {
        "runs": len(runs),
        "accuracy": stats([r.accuracy for r in runs]),
        "macro_auc": stats([r.macro_auc for r in runs]),
        "false_positive_rate": stats([r.false_positive_rate for r in runs]),
        "per_class_auc": [stats([r.per_class_auc[c] for r in runs]) for c in range(n_classes)],
        "per_class_accuracy": [stats([r.per_class_accuracy[c] for r in runs]) for c in range(n_classes)],
        "confusion_mean": np.mean([r.confusion for r in runs], axis=0).tolist(),
        "per_run": [r.to_dict() for r in runs],
    }
