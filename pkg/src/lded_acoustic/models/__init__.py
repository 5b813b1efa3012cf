from .classic import DEFAULT_HYPERPARAMS, ClassicModel, fit_classic, make_estimator
from .cnn import CnnArchitecture, CnnModel, TrainConfig, TrainingDiverged, cnn_forward, cnn_train
from .io import ModelFormatError, ModelKindError, load_model, save_model
from .knn import KNeighbors, knn_predict
from .logistic import LogisticRegression, train_logistic
from .metrics import Metrics, compute_metrics, evaluate, summarize_runs
from .naive_bayes import GaussianNB, train_gaussian_nb
from .preprocessing import Standardizer, apply_standardizer, fit_standardizer
from .selection import GridSearchResult, grid_search_cv, stratified_kfold
from .tree import DecisionTree, RandomForest, train_decision_tree, train_random_forest

__all__ = [
    "ClassicModel", "CnnArchitecture", "CnnModel", "DEFAULT_HYPERPARAMS", "DecisionTree", "GaussianNB",
    "GridSearchResult", "KNeighbors", "LogisticRegression", "Metrics", "ModelFormatError", "ModelKindError",
    "RandomForest", "Standardizer", "TrainConfig", "TrainingDiverged", "apply_standardizer", "cnn_forward",
    "cnn_train", "compute_metrics", "evaluate", "fit_classic", "fit_standardizer", "grid_search_cv",
    "knn_predict", "load_model", "make_estimator", "save_model", "stratified_kfold", "summarize_runs",
    "train_decision_tree", "train_gaussian_nb", "train_logistic", "train_random_forest",
]
