"""Greedy quality-plus-diversity selection (maximum marginal relevance family)."""

import heapq
import logging
import time
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from muss.core import (
    Criterion,
    Dataset,
    SelectionParams,
    SelectionResult,
    distances_to,
    evaluate_selection,
    objective,
)
from muss.errors import InvalidSelectionError, PreconditionError

logger = logging.getLogger(__name__)

SWEEP_SIGMAS = (0.0, 0.5, 1.0)


class GreedyTrace(BaseModel):
    """Per-step diagnostics of a greedy run."""

    picks: list[int] = Field(default_factory=list)
    gains: list[float] = Field(default_factory=list)
    candidate_pool_sizes: list[int] = Field(default_factory=list)


class Lemma1Check(BaseModel):
    """Both inequalities evaluated for one unselected candidate."""

    candidate: int
    quality_gain: float
    quality_slack: float
    min_distance: float
    distance_slack: float
    passed: bool


class Lemma1Report(BaseModel):
    """Outcome of checking a greedy selection against its leftover candidates."""

    k: int
    lambda_: float = Field(alias="lambda")
    objective: float
    quality_bound: float
    distance_bound: float
    checks: list[Lemma1Check] = Field(default_factory=list)

    model_config = ConfigDict(populate_by_name=True)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def violations(self) -> int:
        return sum(not check.passed for check in self.checks)


def _within(value: float, bound: float) -> bool:
    return value <= bound + 1e-9 * max(1.0, abs(bound))


def _greedy_order(
    points: np.ndarray,
    qualities: np.ndarray,
    params: SelectionParams,
    lazy: bool,
) -> GreedyTrace:
    """Run greedy over local row indices 0..len(points)-1."""
    size = points.shape[0]
    take = min(params.k, size)
    lam = params.lambda_
    quality_part = params.sigma * lam * qualities
    use_min = params.criterion == Criterion.MIN_DISTANCE

    first = int(np.argmax(qualities))
    trace = GreedyTrace(
        picks=[first],
        gains=[float(quality_part[first])],
        candidate_pool_sizes=[size],
    )
    if take == 1:
        return trace

    if lazy and use_min:
        _lazy_min_distance(points, quality_part, lam, take, trace)
        return trace
    if lazy:
        logger.debug("Lazy evaluation only applies to the min-distance criterion, using full scan")

    chosen = np.zeros(size, dtype=bool)
    chosen[first] = True
    running = np.full(size, np.inf) if use_min else np.zeros(size)

    for step in range(1, take):
        last_dist = distances_to(points, points[trace.picks[-1]])
        if use_min:
            np.minimum(running, last_dist, out=running)
            spread = running
        else:
            running += last_dist
            spread = running / step if params.normalize_by_size else running
        scores = quality_part + (1 - lam) * spread
        scores[chosen] = -np.inf
        best = int(np.argmax(scores))
        chosen[best] = True
        trace.picks.append(best)
        trace.gains.append(float(scores[best]))
        trace.candidate_pool_sizes.append(size - step)
    return trace


def _lazy_min_distance(
    points: np.ndarray,
    quality_part: np.ndarray,
    lam: float,
    take: int,
    trace: GreedyTrace,
) -> None:
    """Heap-based greedy for the min-distance criterion; stale scores are upper bounds."""
    size = points.shape[0]
    first = trace.picks[0]
    running = distances_to(points, points[first])
    seen = np.ones(size, dtype=np.int64)
    heap = [(-(quality_part[i] + (1 - lam) * running[i]), i) for i in range(size) if i != first]
    heapq.heapify(heap)

    while len(trace.picks) < take:
        _, idx = heapq.heappop(heap)
        picked = len(trace.picks)
        if seen[idx] < picked:
            fresh = distances_to(points[trace.picks[seen[idx] :]], points[idx])
            running[idx] = min(running[idx], float(fresh.min()))
            seen[idx] = picked
        score = quality_part[idx] + (1 - lam) * running[idx]
        if heap and (-score, idx) > heap[0]:
            heapq.heappush(heap, (-score, idx))
            continue
        trace.picks.append(int(idx))
        trace.gains.append(float(score))
        trace.candidate_pool_sizes.append(size - picked)


def greedy_select(
    ds: Dataset,
    pool: Sequence[int],
    params: SelectionParams,
    *,
    lazy: bool = False,
    method: str = "greedy",
) -> tuple[SelectionResult, GreedyTrace]:
    """
    Greedy selection over a candidate pool.

    Starts with the highest-quality item, then repeatedly adds the candidate maximizing
    sigma*lambda*q(t) + (1-lambda)*G(t, S). Ties go to the smallest id; the pool is sorted
    by id first, so the output does not depend on pool order.

    Args:
        ds: Dataset holding the candidates
        pool: Candidate ids (distinct)
        params: Selection parameters
        lazy: Use heap-based lazy evaluation (min-distance criterion only)
        method: Name recorded on the result

    Returns:
        Tuple of (SelectionResult, GreedyTrace), both in dataset ids

    Raises:
        InvalidSelectionError: If the pool is empty or has bad ids
    """
    started = time.perf_counter()
    ids = np.sort(ds.check_ids(pool))
    if ids.size == 0:
        raise InvalidSelectionError("Candidate pool is empty")

    local = _greedy_order(ds.embeddings[ids], ds.qualities[ids], params, lazy)
    trace = GreedyTrace(
        picks=[int(ids[i]) for i in local.picks],
        gains=local.gains,
        candidate_pool_sizes=local.candidate_pool_sizes,
    )
    elapsed = (time.perf_counter() - started) * 1000.0
    result = evaluate_selection(
        ds,
        trace.picks,
        params.lambda_,
        method=method,
        wall_time_ms=elapsed,
        params_echo=params.model_dump(mode="json", by_alias=True),
    )
    return result, trace


def greedy_select_sigma_sweep(
    ds: Dataset,
    pool: Sequence[int],
    params: SelectionParams,
    *,
    method: str = "greedy-sweep",
) -> SelectionResult:
    """
    Run greedy with quality scalers 0, 0.5 and 1 and keep the best unscaled objective.

    Sigma only changes the selection rule; every run is scored with the plain objective
    under the caller's lambda. Ties go to the smaller sigma.
    """
    started = time.perf_counter()
    best: SelectionResult | None = None
    scores: dict[str, float] = {}
    for sigma in SWEEP_SIGMAS:
        scaled = params.model_copy(update={"sigma": sigma})
        result, _ = greedy_select(ds, pool, scaled, method=method)
        scores[str(sigma)] = result.objective
        if best is None or result.objective > best.objective:
            best = result
    assert best is not None
    best.wall_time_ms = (time.perf_counter() - started) * 1000.0
    best.params_echo = {**best.params_echo, "sigma_sweep": scores}
    logger.debug("Sigma sweep objectives: %s", scores)
    return best


def check_lemma1(
    ds: Dataset,
    pool: Sequence[int],
    result: SelectionResult,
    lambda_: float,
) -> Lemma1Report:
    """
    Check the per-candidate greedy inequalities for every pool item left out of `result`.

    For t outside S: q(t) <= F(S) / (k*lambda) and
    min_z d(t, z) <= 2.5 F(S) / (k(k-1)(1-lambda)), with F in the raw (ordered-pair) form.

    Raises:
        PreconditionError: If lambda is 0 or 1, k < 2, or the result was not produced by
            plain greedy (sigma 1, unnormalized sum-distance criterion)
    """
    if not 0.0 < lambda_ < 1.0:
        raise PreconditionError("0 < lambda < 1", f"lambda={lambda_}")
    k = len(result.selected)
    if k <= 1:
        raise PreconditionError("k > 1", f"k={k}")
    echo = result.params_echo
    if echo:
        if float(echo.get("sigma", 1.0)) != 1.0:
            raise PreconditionError("greedy run with sigma = 1", f"sigma={echo['sigma']}")
        if echo.get("criterion", Criterion.SUM_DISTANCE.value) != Criterion.SUM_DISTANCE.value:
            raise PreconditionError("sum-distance criterion", f"criterion={echo['criterion']}")
        if echo.get("normalize_by_size", False):
            raise PreconditionError("unnormalized distance sums")

    pool_ids = ds.check_ids(pool)
    selected = ds.check_ids(result.selected)
    if not np.isin(selected, pool_ids).all():
        raise PreconditionError("selection drawn from the pool")

    value, _, _ = objective(ds, selected, lambda_)
    quality_bound = value / (k * lambda_)
    distance_bound = 2.5 * value / (k * (k - 1) * (1 - lambda_))
    report = Lemma1Report(
        k=k,
        lambda_=lambda_,
        objective=value,
        quality_bound=quality_bound,
        distance_bound=distance_bound,
    )

    leftover = np.setdiff1d(pool_ids, selected)
    if leftover.size == 0:
        return report
    selected_points = ds.embeddings[selected]
    for t in leftover:
        gain = float(ds.qualities[t])
        nearest = float(distances_to(selected_points, ds.embeddings[t]).min())
        report.checks.append(
            Lemma1Check(
                candidate=int(t),
                quality_gain=gain,
                quality_slack=quality_bound - gain,
                min_distance=nearest,
                distance_slack=distance_bound - nearest,
                passed=_within(gain, quality_bound) and _within(nearest, distance_bound),
            )
        )
    return report
