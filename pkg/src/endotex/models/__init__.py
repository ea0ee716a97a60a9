"""Classifiers and ensembles operating on feature matrices."""

from .trees import DecisionTree, Forest, ForestParams, TreeParams, train_forest, train_tree
from .linear import LogisticModel, LogisticParams, train_logistic
from .mlp import MlpModel, MlpParams, train_mlp
from .ensemble import (
    BaggedModel,
    StackedModel,
    VotingModel,
    sum_member_probabilities,
    train_bagged,
    train_stacked,
    train_weighted_ensemble,
    weighted_vote,
)
from .io import load_model, model_from_dict, model_to_dict, save_model

__all__ = [
    "DecisionTree",
    "Forest",
    "ForestParams",
    "TreeParams",
    "train_forest",
    "train_tree",
    "LogisticModel",
    "LogisticParams",
    "train_logistic",
    "MlpModel",
    "MlpParams",
    "train_mlp",
    "BaggedModel",
    "StackedModel",
    "VotingModel",
    "sum_member_probabilities",
    "train_bagged",
    "train_stacked",
    "train_weighted_ensemble",
    "weighted_vote",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "save_model",
]
