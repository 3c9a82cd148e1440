"""Optimal sensor scheduling and remote estimation over an additive Gamma-noise channel."""
from .coding import EPSILON, ModelParams, decode, encode, optimal_threshold, schedule, stage_total_cost
from .distributions import GammaParams, LaplaceParams, RngStream, sample_gamma, sample_laplace
from .dp import HorizonSpec, SolverError, ValueTable, opportunity_cost, policy_threshold, solve
from .simulator import BatchStats, EpisodeTrace, StepRecord, run_batch, run_episode

__all__ = [
    "EPSILON", "ModelParams", "decode", "encode", "optimal_threshold", "schedule",
    "stage_total_cost", "GammaParams", "LaplaceParams", "RngStream", "sample_gamma",
    "sample_laplace", "HorizonSpec", "SolverError", "ValueTable", "opportunity_cost",
    "policy_threshold", "solve", "BatchStats", "EpisodeTrace", "StepRecord", "run_batch",
    "run_episode",
]
