"""Smoothed-hinge active-set Newton solver for l1-l2 soft-margin SVMs."""

__version__ = "0.1.0"

from .dataset import (Dataset, Standardizer, SyntheticSpec, augment_bias, generate_synthetic,
                      load_csv, load_libsvm, save_libsvm, standardize_apply, standardize_fit)
from .linesearch import LineSearchResult, linesearch_l1
from .model_eval import Model, accuracy, load_model, nested_cv, predict, save_model
from .objective import (Hyperparams, gradient_smooth, hessian_active, margins, objective, psi,
                        smoothed_hinge)
from .solver import SolveResult, solve

__all__ = [
    "Dataset", "Standardizer", "SyntheticSpec", "augment_bias", "generate_synthetic", "load_csv",
    "load_libsvm", "save_libsvm", "standardize_apply", "standardize_fit", "LineSearchResult",
    "linesearch_l1", "Model", "accuracy", "load_model", "nested_cv", "predict", "save_model",
    "Hyperparams", "gradient_smooth", "hessian_active", "margins", "objective", "psi",
    "smoothed_hinge", "SolveResult", "solve",
]
