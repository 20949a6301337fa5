from .base import MultiOutputModel
from .knn import KNNRegressor
from .linear import LinearModel, coordinate_descent, fit_elastic_net, fit_lasso, fit_ridge
from .pool import (FAMILIES, LearnerSpec, default_pool, fit_knn, fit_learner, fit_linear,
                   fit_projection, fit_tree_family, format_pool, load_pool, model_seed,
                   parse_pool, predict)
from .projection import fit_pcr, fit_pls, nipals_pls
from .trees import RegressionTree, TreeEnsemble, fit_trees, grow_tree

__all__ = [
    "FAMILIES", "KNNRegressor", "LearnerSpec", "LinearModel", "MultiOutputModel",
    "RegressionTree", "TreeEnsemble", "coordinate_descent", "default_pool", "fit_elastic_net",
    "fit_knn", "fit_lasso", "fit_learner", "fit_linear", "fit_pcr", "fit_pls", "fit_projection",
    "fit_ridge", "fit_tree_family", "fit_trees", "format_pool", "grow_tree", "load_pool",
    "model_seed", "nipals_pls", "parse_pool", "predict",
]
