"""Reference selectors: random sample, top-k quality and cluster representatives."""

import time
from enum import Enum

import numpy as np

from muss.clustering import kmeans_fit
from muss.core import Dataset, SelectionResult, evaluate_selection
from muss.errors import InvalidSelectionError, MussError


class BaselineKind(str, Enum):
    RANDOM = "random"
    TOPK_QUALITY = "topk_quality"
    CLUSTER_REPS = "cluster_reps"


def top_k_quality(ds: Dataset, k: int) -> list[int]:
    """The k highest-quality ids, best first (ties to the smallest id)."""
    order = np.argsort(-ds.qualities, kind="stable")
    return order[:k].tolist()


def _cluster_representatives(ds: Dataset, k: int, seed: int) -> list[int]:
    model = kmeans_fit(ds, k, seed=seed)
    reps = []
    for cluster in range(model.l):
        members = model.members(cluster)
        reps.append(int(members[np.argmax(ds.qualities[members])]))
    return reps


def baseline_select(
    ds: Dataset,
    kind: BaselineKind | str,
    k: int,
    seed: int = 0,
    lambda_: float = 0.5,
) -> SelectionResult:
    """
    Select k items with a non-greedy reference strategy.

    Args:
        ds: Dataset to select from
        kind: random (uniform without replacement), topk_quality, or cluster_reps
            (k-means with k clusters, best-quality member of each)
        k: Number of items (at most n)
        seed: Seed for the random sample or the clustering
        lambda_: Trade-off used only to score the result

    Raises:
        MussError: On an unknown kind
        InvalidSelectionError: If k is not in [1, n]
    """
    try:
        kind = BaselineKind(kind)
    except ValueError:
        choices = ", ".join(member.value for member in BaselineKind)
        raise MussError(f"Unknown baseline '{kind}' (choose from {choices})") from None
    if not 1 <= k <= ds.n:
        raise InvalidSelectionError(f"k must be in [1, {ds.n}], got {k}")

    started = time.perf_counter()
    if kind is BaselineKind.RANDOM:
        rng = np.random.default_rng(seed)
        selected = rng.choice(ds.n, size=k, replace=False).tolist()
    elif kind is BaselineKind.TOPK_QUALITY:
        selected = top_k_quality(ds, k)
    else:
        selected = _cluster_representatives(ds, k, seed)
    elapsed = (time.perf_counter() - started) * 1000.0

    return evaluate_selection(
        ds,
        selected,
        lambda_,
        method=kind.value,
        wall_time_ms=elapsed,
        params_echo={"kind": kind.value, "k": k, "seed": seed, "lambda": lambda_},
    )
