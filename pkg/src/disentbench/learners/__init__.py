"""Statistical and learning primitives used by the metrics."""
from .base import ClassifierModel, ConstantModel
from .gbt import GBTConfig, GBTModel, fit_gbt
from .infotheory import DiscretizedBatch, discretize, entropy, mutual_information
from .logistic import LogisticConfig, LogisticModel, fit_logistic, fit_logistic_cv, fit_or_constant
from .stats import GaussianFit, fit_gaussian, gaussian_tc, ols_r2, spearman
from .svm import LinearSVMModel, fit_linear_svm
from .vote import MajorityVoteModel, majority_vote

__all__ = [
    "ClassifierModel", "ConstantModel", "DiscretizedBatch", "GBTConfig", "GBTModel",
    "GaussianFit", "LinearSVMModel", "LogisticConfig", "LogisticModel",
    "MajorityVoteModel", "discretize", "entropy", "fit_gaussian", "fit_gbt",
    "fit_linear_svm", "fit_logistic", "fit_logistic_cv", "fit_or_constant",
    "gaussian_tc", "majority_vote", "mutual_information", "ols_r2", "spearman",
]
