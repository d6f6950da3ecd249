"""Selection strategies built on greedy selection."""

from muss.selectors.baselines import BaselineKind, baseline_select, top_k_quality
from muss.selectors.bounds import ApproximationBound, compute_theorem5_bound
from muss.selectors.distributed import DgdsParams, dgds_select
from muss.selectors.multilevel import MussParams, ablation_rand_a, ablation_rand_b, muss_select
from muss.selectors.registry import Method, MethodConfig, run_method

__all__ = [
    "ApproximationBound",
    "BaselineKind",
    "DgdsParams",
    "Method",
    "MethodConfig",
    "MussParams",
    "ablation_rand_a",
    "ablation_rand_b",
    "baseline_select",
    "compute_theorem5_bound",
    "dgds_select",
    "muss_select",
    "run_method",
    "top_k_quality",
]
