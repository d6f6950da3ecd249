"""Name-based dispatch over every selector, shared by the CLI and the benchmark."""

import logging
import time
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from muss.clustering import ClusterModel, kmeans_fit
from muss.core import Criterion, Dataset, SelectionParams, SelectionResult
from muss.errors import MussError
from muss.greedy import greedy_select, greedy_select_sigma_sweep
from muss.selectors.baselines import BaselineKind, baseline_select
from muss.selectors.distributed import DgdsParams, dgds_select
from muss.selectors.multilevel import MussParams, ablation_rand_a, ablation_rand_b, muss_select

logger = logging.getLogger(__name__)


class Method(str, Enum):
    MMR = "mmr"
    MUSS = "muss"
    MUSS_PRIME = "muss-prime"
    DGDS = "dgds"
    RAND_A = "rand-a"
    RAND_B = "rand-b"
    RANDOM = "random"
    TOPK = "topk"
    CLUSTER_REPS = "cluster-reps"


# Methods that need a trained clustering (fitted in-process unless one is supplied).
CLUSTERED = frozenset({Method.MUSS, Method.MUSS_PRIME, Method.RAND_A})

REQUIRED_SETTINGS: dict[Method, tuple[str, ...]] = {
    Method.MUSS: ("l", "m", "k_within"),
    Method.MUSS_PRIME: ("l", "m", "k_within"),
    Method.RAND_A: ("l", "m", "k_within"),
    Method.RAND_B: ("l", "m", "k_within"),
    Method.DGDS: ("l", "k_within"),
}

_BASELINES = {
    Method.RANDOM: BaselineKind.RANDOM,
    Method.TOPK: BaselineKind.TOPK_QUALITY,
    Method.CLUSTER_REPS: BaselineKind.CLUSTER_REPS,
}


class MethodConfig(BaseModel):
    """Union of the settings any selector may read; unused ones are ignored."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    k: int = Field(ge=1)
    k_within: Optional[int] = Field(default=None, ge=1)
    l: Optional[int] = Field(default=None, ge=1)
    m: Optional[int] = Field(default=None, ge=1)
    lambda_: float = Field(default=0.5, ge=0.0, le=1.0, alias="lambda")
    lambda_c: float = Field(default=0.5, ge=0.0, le=1.0)
    lambda_within: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    lambda_final: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    criterion: Criterion = Criterion.SUM_DISTANCE
    normalize_by_size: bool = True
    sigma_sweep: bool = False
    workers: int = Field(default=1, ge=1)
    seed: int = 0
    quality_weight: float = Field(default=0.0, ge=0.0)
    max_iters: int = Field(default=100, ge=1)
    tol: float = Field(default=1e-6, gt=0.0)

    def missing(self, method: Method) -> list[str]:
        """Settings the method needs that are still unset."""
        return [name for name in REQUIRED_SETTINGS.get(method, ()) if getattr(self, name) is None]


def _muss_params(config: MethodConfig, sigma_final: float = 1.0) -> MussParams:
    return MussParams(
        k=config.k,
        k_within=config.k_within,
        l=config.l,
        m=config.m,
        lambda_=config.lambda_,
        lambda_c=config.lambda_c,
        lambda_within=config.lambda_within,
        lambda_final=config.lambda_final,
        sigma_final=sigma_final,
        sigma_sweep=config.sigma_sweep,
        criterion=config.criterion,
        normalize_by_size=config.normalize_by_size,
        workers=config.workers,
        seed=config.seed,
    )


def _fit(ds: Dataset, config: MethodConfig) -> tuple[ClusterModel, float]:
    tick = time.perf_counter()
    model = kmeans_fit(
        ds,
        config.l,
        quality_weight=config.quality_weight,
        seed=config.seed,
        max_iters=config.max_iters,
        tol=config.tol,
    )
    return model, (time.perf_counter() - tick) * 1000.0


def run_method(
    ds: Dataset,
    method: Method | str,
    config: MethodConfig,
    model: Optional[ClusterModel] = None,
) -> SelectionResult:
    """
    Run one named selector.

    Clustered methods fit k-means with (l, quality_weight, seed) unless `model` is given;
    the fit shows up as a "clustering" stage and counts toward wall time.

    Raises:
        MussError: On an unknown method or missing required settings
    """
    try:
        method = Method(method)
    except ValueError:
        choices = ", ".join(m.value for m in Method)
        raise MussError(f"Unknown method '{method}' (choose from {choices})") from None
    missing = config.missing(method)
    if missing:
        raise MussError(f"Method '{method.value}' requires: {', '.join(missing)}")

    if method is Method.MMR:
        params = SelectionParams(
            k=config.k,
            lambda_=config.lambda_,
            criterion=config.criterion,
            normalize_by_size=config.normalize_by_size,
        )
        if config.sigma_sweep:
            return greedy_select_sigma_sweep(ds, range(ds.n), params, method=method.value)
        result, _ = greedy_select(ds, range(ds.n), params, method=method.value)
        return result

    if method in _BASELINES:
        result = baseline_select(ds, _BASELINES[method], config.k, config.seed, config.lambda_)
        result.method = method.value
        return result

    if method is Method.DGDS:
        params = DgdsParams(
            k=config.k,
            k_within=config.k_within,
            l=config.l,
            lambda_=config.lambda_,
            criterion=config.criterion,
            normalize_by_size=config.normalize_by_size,
            workers=config.workers,
            seed=config.seed,
        )
        return dgds_select(ds, params)

    if method is Method.RAND_B:
        return ablation_rand_b(ds, _muss_params(config))

    clustering_ms = 0.0
    if model is None:
        model, clustering_ms = _fit(ds, config)
        logger.info("Clustered %d items into %d clusters", ds.n, model.l)
    if method is Method.MUSS:
        result = muss_select(ds, model, _muss_params(config))
    elif method is Method.MUSS_PRIME:
        result = muss_select(ds, model, _muss_params(config, sigma_final=0.5))
    else:
        result = ablation_rand_a(ds, model, _muss_params(config))
    result.method = method.value
    result.stage_times = {"clustering": clustering_ms, **result.stage_times}
    result.wall_time_ms += clustering_ms
    return result
