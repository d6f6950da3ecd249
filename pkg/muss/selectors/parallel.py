"""Concurrent per-group greedy selection with a canonical merge order."""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

from muss.core import Dataset, SelectionParams
from muss.greedy import greedy_select

logger = logging.getLogger(__name__)


def select_within_groups(
    ds: Dataset,
    groups: Sequence[Sequence[int]],
    params: SelectionParams,
    workers: int = 1,
) -> list[list[int]]:
    """
    Run greedy inside every group, up to `workers` groups at a time.

    Results come back in group order whatever the worker count, each in pick order.
    Groups smaller than params.k are taken whole.
    """
    if workers <= 1 or len(groups) <= 1:
        return [greedy_select(ds, group, params)[0].selected for group in groups]

    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(greedy_select, ds, group, params) for group in groups]
        selections = [future.result()[0].selected for future in futures]
    logger.debug("Selected within %d groups using %d workers", len(groups), workers)
    return selections


def merge_unique(*selections: Sequence[int]) -> list[int]:
    """Concatenate selections, keeping the first occurrence of every id."""
    return list(dict.fromkeys(int(i) for selection in selections for i in selection))
