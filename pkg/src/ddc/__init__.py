"""Asymptotic theory and Monte Carlo validation for binary linear
classification across the interpolation threshold.

The package computes exact high-dimensional predictions (phase transition,
maximum-likelihood asymptotics, max-margin asymptotics) for classification
under logistic and Gaussian-mixture data models, and validates them against
finite-size simulations of gradient descent on the logistic loss and the
hard-margin SVM, reproducing double-descent risk curves.
"""

__version__ = "0.1.0"

from .errors import (
    BadShape,
    BracketFailure,
    DdcError,
    NoConvergence,
    NonFiniteIntegrand,
    NoRoot,
    NotInRegime,
    OutOfDomain,
    ZeroVector,
)
from .gaussian_core import (
    NoiseModelV,
    QuadratureSpec,
    expect_HV,
    normal_pdf,
    normal_tail,
    truncated_second_moment,
)
from .logistic_scalar import (
    ProxResult,
    loss,
    loss_d1,
    loss_d2,
    moreau_env,
    prox_logistic,
    sigmoid,
)
from .feature_map import DataModelSpec, FeatureMap, best_risk, signal_strength
from .phase_transition import PhaseResult, solve_kappa_star, threshold_g
from .ml_solver import MlSolution, ml_predictions, ml_residuals, solve_ml
from .svm_solver import SvmSolution, eta, solve_svm, svm_predictions
from .datagen import TrainSet, dump_csv, generate
from .trainers import (
    GdConfig,
    SvmConfig,
    TrainedClassifier,
    exact_metrics,
    gd_logistic,
    svm_train,
)
from .experiment_cli import ExperimentConfig, SweepRow, run_sweep

__all__ = [
    "__version__",
    "BadShape", "BracketFailure", "DdcError", "NoConvergence",
    "NonFiniteIntegrand", "NoRoot", "NotInRegime", "OutOfDomain", "ZeroVector",
    "NoiseModelV", "QuadratureSpec", "expect_HV", "normal_pdf", "normal_tail",
    "truncated_second_moment",
    "ProxResult", "loss", "loss_d1", "loss_d2", "moreau_env", "prox_logistic",
    "sigmoid",
    "DataModelSpec", "FeatureMap", "best_risk", "signal_strength",
    "PhaseResult", "solve_kappa_star", "threshold_g",
    "MlSolution", "ml_predictions", "ml_residuals", "solve_ml",
    "SvmSolution", "eta", "solve_svm", "svm_predictions",
    "TrainSet", "dump_csv", "generate",
    "GdConfig", "SvmConfig", "TrainedClassifier", "exact_metrics",
    "gd_logistic", "svm_train",
    "ExperimentConfig", "SweepRow", "run_sweep",
]
