"""Train/evaluate protocol shared by the CLI and the acceptance suite.

A stratified 80/20 shuffle split, a model fitted on the training part and the
metrics on the held-out part, optionally repeated over several seeds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analysis import stratified_split
from .dataset import LabeledSegments, feature_table, mfcc_tensors
from .features import SELECTED_FEATURES
from .models import CnnArchitecture, Metrics, TrainConfig, cnn_train, compute_metrics, fit_classic, summarize_runs
from .models.cnn import EpochLog

CNN = "cnn"
CNN_EPOCHS = 40


@dataclass
class RunResult:
    model: object
    metrics: Metrics
    train_idx: np.ndarray
    test_idx: np.ndarray
    log: list[EpochLog] = field(default_factory=list)
    seed: int = 0


def model_inputs(data: LabeledSegments, kind: str, features=SELECTED_FEATURES) -> np.ndarray:
    """MFCC tensors for the CNN, selected segment statistics for the classic learners."""
    if kind == CNN:
        return mfcc_tensors(data)
    return feature_table(data, features).X


def train_once(
    kind: str,
    X: np.ndarray,
    y: np.ndarray,
    seed: int,
    epochs: int = CNN_EPOCHS,
    test_fraction: float = 0.2,
    params: dict | None = None,
    features=SELECTED_FEATURES,
    arch: CnnArchitecture = CnnArchitecture(),
) -> RunResult:
    """Split with ``seed``, fit with ``seed`` and score on the held-out rows."""
    train_idx, test_idx = stratified_split(y, test_fraction, seed)
    log: list[EpochLog] = []
    if kind == CNN:
        cfg = TrainConfig(epochs=epochs, seed=seed, **(params or {}))
        model, log = cnn_train(X[train_idx], y[train_idx], cfg, arch, X[test_idx], y[test_idx])
    else:
        model = fit_classic(kind, X[train_idx], y[train_idx], params, seed, features)
    metrics = compute_metrics(y[test_idx], model.predict_proba(X[test_idx]))
    return RunResult(model, metrics, train_idx, test_idx, log, seed)


def repeated_runs(kind: str, X: np.ndarray, y: np.ndarray, seed: int, runs: int = 5, **kwargs) -> tuple[list[RunResult], dict]:
    """``runs`` independent splits and fits with seeds seed, seed+1, ...; returns results and the summary."""
    results = [train_once(kind, X, y, seed + i, **kwargs) for i in range(runs)]
    return results, summarize_runs([r.metrics for r in results])
