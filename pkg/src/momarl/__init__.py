"""Multi-objective multi-agent actor-critic laboratory.

A numpy implementation of preference-conditioned, centralized-critic,
multi-headed-actor reinforcement learning for continuous cooperative
control, together with independent-learner and fixed-weight outer-loop
baselines and the full coverage-set evaluation protocol (expected utility,
hypervolume, cardinality, sparsity, Welch tests, utility-bias probes).
"""

from .agents import AlgoConfig, NumericalAbort, TrainResult, TrainSinks, train
from .baselines import OuterLoopPlan, default_outer_plan, train_ind_mo_td3, train_outer_loop
from .envs import EnvSpec, brute_force_front, pad_observation
from .evaluation import (
    DEFAULT_HV_REF,
    cardinality,
    eum,
    evaluate_coverage,
    evaluation_summary,
    hypervolume_2d,
    pareto_filter,
    sparsity,
    utility_bias_probe,
    welch_t_test,
)
from .preferences import equally_spaced_weights, linear_utility, sample_simplex

__version__ = "0.1.0"

__all__ = [
    "AlgoConfig",
    "DEFAULT_HV_REF",
    "EnvSpec",
    "NumericalAbort",
    "OuterLoopPlan",
    "TrainResult",
    "TrainSinks",
    "brute_force_front",
    "cardinality",
    "default_outer_plan",
    "equally_spaced_weights",
    "eum",
    "evaluate_coverage",
    "evaluation_summary",
    "hypervolume_2d",
    "linear_utility",
    "pad_observation",
    "pareto_filter",
    "sample_simplex",
    "sparsity",
    "train",
    "train_ind_mo_td3",
    "train_outer_loop",
    "utility_bias_probe",
    "welch_t_test",
]
