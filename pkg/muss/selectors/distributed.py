"""Distributed greedy baseline: random partitions, local greedy, greedy over the union."""

import logging
import time

from pydantic import BaseModel, ConfigDict, Field

from muss.clustering import random_partition
from muss.core import Criterion, Dataset, SelectionParams, SelectionResult
from muss.greedy import greedy_select
from muss.selectors.parallel import merge_unique, select_within_groups

logger = logging.getLogger(__name__)


class DgdsParams(BaseModel):
    """Parameters of the random-partition distributed selector."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    k: int = Field(ge=1)
    k_within: int = Field(ge=1)
    l: int = Field(ge=1)
    lambda_: float = Field(default=0.5, ge=0.0, le=1.0, alias="lambda")
    sigma_final: float = Field(default=1.0, ge=0.0)
    criterion: Criterion = Criterion.SUM_DISTANCE
    normalize_by_size: bool = True
    workers: int = Field(default=1, ge=1)
    seed: int = 0


def dgds_select(ds: Dataset, params: DgdsParams) -> SelectionResult:
    """
    Partition the ids at random into l balanced parts, greedily pick k_within items in
    each part (in parallel), then greedily pick k items from the union.

    Unlike the multilevel selector there is no cluster pruning and no top-k augmentation.
    """
    started = time.perf_counter()
    stage_times: dict[str, float] = {}

    tick = time.perf_counter()
    parts = random_partition(ds, params.l, params.seed)
    stage_times["partition"] = (time.perf_counter() - tick) * 1000.0

    tick = time.perf_counter()
    local_params = SelectionParams(
        k=params.k_within,
        lambda_=params.lambda_,
        criterion=params.criterion,
        normalize_by_size=params.normalize_by_size,
    )
    per_part = select_within_groups(ds, parts, local_params, params.workers)
    stage_times["within_partition"] = (time.perf_counter() - tick) * 1000.0
    logger.info("Selected within %d partitions", len(parts))

    tick = time.perf_counter()
    pool = merge_unique(*per_part)
    final_params = local_params.model_copy(update={"k": params.k, "sigma": params.sigma_final})
    result, _ = greedy_select(ds, pool, final_params, method="dgds")
    stage_times["final"] = (time.perf_counter() - tick) * 1000.0
    logger.info("Final selection of %d items from a pool of %d", len(result.selected), len(pool))

    result.stage_times = stage_times
    result.wall_time_ms = (time.perf_counter() - started) * 1000.0
    result.params_echo = {
        **params.model_dump(mode="json", by_alias=True),
        "pool_size": len(pool),
    }
    return result
