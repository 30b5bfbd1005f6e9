from .backend import BACKEND
from .core import (
    GBDTModel,
    SplitCandidate,
    TrainParams,
    Tree,
    best_split,
    best_split_all,
    feature_importance,
    log_odds,
    logistic_grad_hess,
    predict_margin,
    predict_proba,
    sigmoid,
    train,
)

__all__ = [
    "BACKEND",
    "GBDTModel",
    "SplitCandidate",
    "TrainParams",
    "Tree",
    "best_split",
    "best_split_all",
    "feature_importance",
    "log_odds",
    "logistic_grad_hess",
    "predict_margin",
    "predict_proba",
    "sigmoid",
    "train",
]
