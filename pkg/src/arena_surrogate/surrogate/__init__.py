"""Surrogate judge: regression forest, linear baseline and ranking metrics."""
from .dataset import DEFAULT_HOLDOUT, DatasetError, HoldoutProtocol, TrainingSet, build_dataset, feature_columns
from .forest import (ForestParams, RegressionForest, RegressionTree, feature_importance, fit_forest, fit_tree,
                     predict, train_forest)
from .linear import LinearModel, train_linear
from .metrics import kendall_tau, r_squared
from .pipeline import R2Protocol, SurrogateResult, per_tournament_r2, surrogate_pipeline

__all__ = [
    "DEFAULT_HOLDOUT", "DatasetError", "HoldoutProtocol", "TrainingSet", "build_dataset", "feature_columns",
    "ForestParams", "RegressionForest", "RegressionTree", "feature_importance", "fit_forest", "fit_tree",
    "predict", "train_forest", "LinearModel", "train_linear", "kendall_tau", "r_squared",
    "R2Protocol", "SurrogateResult", "per_tournament_r2", "surrogate_pipeline",
]
