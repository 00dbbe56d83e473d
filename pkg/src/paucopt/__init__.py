"""Partial-AUC and sum-of-ranked-range optimization for linear scorers.

The objective is written as a difference of two top-l sums of pairwise
logistic losses, smoothed by Moreau envelopes and minimized with
approximate gradient descent whose proximal points come from a stochastic
block coordinate solver. DCA and proximal DCA are included for comparison,
and :mod:`paucopt.oracle` provides deterministic references for testing.
"""
from .dataset import (BinaryDataset, DataError, RegressionDataset, SyntheticSpec,
                      generate_logistic_regression, generate_synthetic, load_libsvm,
                      read_libsvm, train_test_split, write_libsvm)
from .surrogate import PairSurface, SmoothnessConstants, estimate_constants
from .ranked_range import (PAucRange, dc_objective, dual_objective, normalized_loss,
                           optimal_lambda_intervals, ranked_range_sum, top_l_sum)
from .metrics import RocCurve, full_auc, pauc, pauc_ranks, roc_curve
from .prox_solver import (ConfigError, ProxProblem, ProxResult, SbcdSchedule,
                          SolverDivergence, sbcd_solve, sgd_solve_sorr)
from .agd import (AgdConfig, CriticalityCertificate, RunTrace, agd_run, certify,
                  smoothed_objective, theory_parameters)
from .baselines import DcaConfig, dca_run, dca_subgradient_fm, prox_dca_run

__version__ = "0.1.0"

__all__ = [
    "AgdConfig", "BinaryDataset", "ConfigError", "CriticalityCertificate", "DataError",
    "DcaConfig", "PAucRange", "PairSurface", "ProxProblem", "ProxResult",
    "RegressionDataset", "RocCurve", "RunTrace", "SbcdSchedule", "SmoothnessConstants",
    "SolverDivergence", "SyntheticSpec", "agd_run", "certify", "dc_objective",
    "dca_run", "dca_subgradient_fm", "dual_objective", "estimate_constants",
    "full_auc", "generate_logistic_regression", "generate_synthetic", "load_libsvm",
    "normalized_loss", "optimal_lambda_intervals", "pauc", "pauc_ranks",
    "prox_dca_run", "ranked_range_sum", "read_libsvm", "roc_curve", "sbcd_solve",
    "sgd_solve_sorr", "smoothed_objective", "theory_parameters", "top_l_sum",
    "train_test_split", "write_libsvm",
]
