"""Convex hull approximation of the near-optimal solution set of L1-regularized models."""
from .data import SyntheticSpec, gen_synthetic, read_csv, read_libsvm
from .errors import (
    BracketFailure,
    ConfigError,
    DataError,
    HullscopeError,
    NonMonotone,
    SamplerError,
    SolverError,
)
from .geometry import Hull, dist_to_hull, directed_hull_distance, hausdorff_estimate, pca_project_2d, project_simplex
from .model import Dataset, FitResult, LossModel, SolverConfig, eval_loss, fit, kkt_residual
from .pipeline import RunConfig, RunResult, curve, run
from .sampler import LevelSetSpec, SampleCloud, SamplerConfig, sample_cloud, solve_direction
from .selector import SelectorConfig, greedy_select, naive_greedy, pick_first

__version__ = "0.1.0"

__all__ = [
    "BracketFailure",
    "ConfigError",
    "DataError",
    "Dataset",
    "FitResult",
    "Hull",
    "HullscopeError",
    "LevelSetSpec",
    "LossModel",
    "NonMonotone",
    "RunConfig",
    "RunResult",
    "SampleCloud",
    "SamplerConfig",
    "SamplerError",
    "SelectorConfig",
    "SolverConfig",
    "SolverError",
    "SyntheticSpec",
    "directed_hull_distance",
    "curve",
    "dist_to_hull",
    "eval_loss",
    "fit",
    "gen_synthetic",
    "greedy_select",
    "hausdorff_estimate",
    "kkt_residual",
    "naive_greedy",
    "pca_project_2d",
    "pick_first",
    "project_simplex",
    "read_csv",
    "read_libsvm",
    "run",
    "sample_cloud",
    "solve_direction",
]
