"""Watch-time ranking laboratory.

A compound Poisson-gamma distribution engine, four ranking objectives over a
small neural ranker, a synthetic-user simulation protocol comparing them, a
KS-statistic distribution-fitting tool, and a Taylor-basis loss-decomposition
framework, all reproducible from explicit seeds.
"""

from .decompose import (BasisCoeffs, ComposeResult, MetricObservations,
                        ProjectionSolution, compose_loss, fit_basis_coeffs,
                        plant_observations, sensitivity_compare,
                        solve_projection, standard_library, taylor_coeffs)
from .distfit import (GridSpec, TweedieKSGridSearch, WatchTimeNormalizer,
                      grid_search, ks_statistic, normalize)
from .harness import (ExperimentReport, ProtocolConfig, emit_report,
                      run_many, run_protocol)
from .losses import (LOGLOSS, MSE, TWEEDIE, WEIGHTED, EPSILON_PRED, LossKind,
                     Sample, logloss, logloss_grad, loss_and_grad, mse_grad,
                     mse_loss, tweedie_grad, tweedie_loss, weighted_logloss)
from .ranker import TitleRanker, TrainConfig, gradient_check
from .simulate import (EventLog, SessionEvent, TitleProfile, World,
                       WorldConfig, editorial_ranking, generate_world,
                       read_event_log, simulate_day, simulate_session,
                       write_event_log)
from .special import reg_incomplete_beta, reg_lower_incomplete_gamma
from .stats import WelchResult, welch_t_test
from .tweedie import (CompoundParams, TweedieParams, cdf, mean_variance,
                      sample, to_compound)

__version__ = "0.1.0"

__all__ = [
    "BasisCoeffs", "ComposeResult", "CompoundParams", "EPSILON_PRED",
    "EventLog", "ExperimentReport", "GridSpec", "LOGLOSS", "LossKind", "MSE",
    "MetricObservations", "ProjectionSolution", "ProtocolConfig", "Sample",
    "SessionEvent", "TWEEDIE", "TitleProfile", "TitleRanker", "TrainConfig",
    "TweedieKSGridSearch", "TweedieParams", "WEIGHTED", "WatchTimeNormalizer",
    "WelchResult", "World", "WorldConfig", "cdf", "compose_loss",
    "editorial_ranking", "emit_report", "fit_basis_coeffs", "generate_world",
    "gradient_check", "grid_search", "ks_statistic", "logloss",
    "logloss_grad", "loss_and_grad", "mean_variance", "mse_grad", "mse_loss",
    "normalize", "plant_observations", "read_event_log",
    "reg_incomplete_beta", "reg_lower_incomplete_gamma", "run_many",
    "run_protocol", "sample", "sensitivity_compare", "simulate_day",
    "simulate_session", "solve_projection", "standard_library",
    "taylor_coeffs", "to_compound", "tweedie_grad", "tweedie_loss",
    "weighted_logloss", "welch_t_test", "write_event_log",
]
