"""K-means over embeddings (optionally augmented with quality) and cluster summaries."""

import json
import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator

from muss.core import Dataset, distances_to
from muss.errors import MussError

logger = logging.getLogger(__name__)

# Points per block in the assignment step; bounds the n x l distance buffer.
_ASSIGN_BLOCK = 8192


class ClusterModel(BaseModel):
    """Trained clustering: centroids, quality centers and per-item assignments."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    l: int = Field(ge=1)
    centroids: np.ndarray
    quality_centers: np.ndarray
    assignments: np.ndarray
    quality_weight: float = Field(default=0.0, ge=0.0)
    wcss: float
    iterations_run: int
    wcss_history: list[float] = Field(default_factory=list)
    seed: int = 0

    @field_validator("centroids", "quality_centers", mode="before")
    @classmethod
    def _as_float_array(cls, value):
        return np.asarray(value, dtype=np.float64)

    @field_validator("assignments", mode="before")
    @classmethod
    def _as_int_array(cls, value):
        return np.asarray(value, dtype=np.int64)

    @field_serializer("centroids", "quality_centers", "assignments")
    def _to_list(self, value: np.ndarray) -> list:
        return value.tolist()

    @property
    def n(self) -> int:
        return int(self.assignments.shape[0])

    @property
    def dim(self) -> int:
        return int(self.centroids.shape[1])

    @property
    def mean_sq_distance(self) -> float:
        """Expected squared distance from a point to its centroid (WCSS / n)."""
        return self.wcss / self.n if self.n else 0.0

    def members(self, cluster_id: int) -> np.ndarray:
        """Ids assigned to a cluster, ascending."""
        return np.flatnonzero(self.assignments == cluster_id)

    def predict(self, ds: Dataset) -> np.ndarray:
        """Assign each item of `ds` to its nearest centroid (combined distance)."""
        if ds.dim != self.dim:
            raise MussError(f"Model has dimension {self.dim}, dataset has {ds.dim}")
        points = _combined_space(ds.embeddings, ds.qualities, self.quality_weight)
        centers = _combined_space(self.centroids, self.quality_centers, self.quality_weight)
        return _assign(points, centers)

    def save(self, output_path: Path) -> None:
        """Save model to JSON file."""
        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, "w") as f:
            f.write(self.model_dump_json(indent=2))

    @classmethod
    def load(cls, path: Path) -> "ClusterModel":
        with open(path, "r") as f:
            return cls.model_validate(json.load(f))


class ClusterSummary(BaseModel):
    """What the cluster-level selection sees of one cluster."""

    cluster_id: int
    centroid: list[float]
    median_quality: float
    radius: float
    member_ids: list[int]
    size: int


def _combined_space(
    embeddings: np.ndarray, qualities: np.ndarray, quality_weight: float
) -> np.ndarray:
    """Append sqrt(w_c)*q as an extra coordinate so squared distances carry the quality term."""
    if quality_weight == 0.0:
        return embeddings
    return np.hstack([embeddings, np.sqrt(quality_weight) * qualities.reshape(-1, 1)])


def _assign(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Nearest center per point (smallest center index on ties)."""
    center_sq = np.einsum("ij,ij->i", centers, centers)
    out = np.empty(points.shape[0], dtype=np.int64)
    for start in range(0, points.shape[0], _ASSIGN_BLOCK):
        block = points[start : start + _ASSIGN_BLOCK]
        block_sq = np.einsum("ij,ij->i", block, block)
        d2 = block_sq[:, None] - 2.0 * block @ centers.T + center_sq[None, :]
        out[start : start + block.shape[0]] = np.argmin(d2, axis=1)
    return out


def _point_costs(points: np.ndarray, centers: np.ndarray, assignments: np.ndarray) -> np.ndarray:
    diff = points - centers[assignments]
    return np.einsum("ij,ij->i", diff, diff)


def _cluster_means(points: np.ndarray, assignments: np.ndarray, l: int) -> np.ndarray:
    """Per-cluster means, summing members in ascending id order."""
    order = np.argsort(assignments, kind="stable")
    counts = np.bincount(assignments, minlength=l)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    sums = np.add.reduceat(points[order], starts, axis=0)
    return sums / counts[:, None]


def _repair_empty(
    points: np.ndarray, assignments: np.ndarray, centers: np.ndarray, l: int
) -> tuple[np.ndarray, np.ndarray]:
    """Give every empty cluster the point farthest from its own centroid."""
    counts = np.bincount(assignments, minlength=l)
    for cluster in np.flatnonzero(counts == 0):
        costs = _point_costs(points, centers, assignments)
        costs[counts[assignments] <= 1] = -np.inf
        donor = int(np.argmax(costs))
        counts[assignments[donor]] -= 1
        counts[cluster] += 1
        assignments[donor] = cluster
        centers[cluster] = points[donor]
        logger.debug("Repaired empty cluster %d with item %d", cluster, donor)
    return assignments, centers


def _kmeans_plus_plus(points: np.ndarray, l: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    origin = np.zeros(n, dtype=np.int64)
    d2 = _point_costs(points, points[chosen], origin)
    for _ in range(1, l):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            nxt = int(rng.integers(n))
        chosen.append(nxt)
        np.minimum(d2, _point_costs(points, points[[nxt]], origin), out=d2)
    return points[chosen].copy()


def combined_objective(
    ds: Dataset,
    assignments: np.ndarray,
    centroids: np.ndarray,
    quality_centers: np.ndarray,
    quality_weight: float,
) -> float:
    """Sum over items of ||x_i - mu_a(i)||^2 + w_c (q_i - phi_a(i))^2."""
    diff = ds.embeddings - centroids[assignments]
    feature = float(np.einsum("ij,ij->", diff, diff))
    quality = float(((ds.qualities - quality_centers[assignments]) ** 2).sum())
    return feature + quality_weight * quality


def kmeans_fit(
    ds: Dataset,
    l: int,
    quality_weight: float = 0.0,
    seed: int = 0,
    max_iters: int = 100,
    tol: float = 1e-6,
) -> ClusterModel:
    """
    Lloyd's k-means with k-means++ seeding in feature (+ weighted quality) space.

    Args:
        ds: Dataset to cluster
        l: Number of clusters
        quality_weight: Weight w_c of the squared quality deviation (0 = features only)
        seed: Seed for the PCG64 generator driving k-means++
        max_iters: Iteration cap
        tol: Stop once the relative objective improvement falls below this

    Returns:
        ClusterModel whose centroids are the means of their final members

    Raises:
        MussError: If l is outside [1, n] or the objective increases between iterations
    """
    if not 1 <= l <= ds.n:
        raise MussError(f"Number of clusters must be in [1, {ds.n}], got {l}")
    if quality_weight < 0:
        raise MussError("quality_weight must be non-negative")
    if tol <= 0:
        raise MussError("tol must be positive")

    points = _combined_space(ds.embeddings, ds.qualities, quality_weight)
    rng = np.random.default_rng(seed)
    centers = _kmeans_plus_plus(points, l, rng)

    history: list[float] = []
    previous = np.inf
    assignments = np.zeros(ds.n, dtype=np.int64)
    iterations = 0
    for iterations in range(1, max_iters + 1):
        fresh = _assign(points, centers)
        fresh, centers = _repair_empty(points, fresh, centers, l)
        cost = float(_point_costs(points, centers, fresh).sum())
        if cost > previous + 1e-9 * max(1.0, previous):
            raise MussError(
                f"k-means objective increased at iteration {iterations}: {previous} -> {cost}"
            )
        history.append(cost)
        unchanged = iterations > 1 and np.array_equal(fresh, assignments)
        assignments = fresh
        centers = _cluster_means(points, assignments, l)
        converged = cost == 0.0 or (np.isfinite(previous) and previous - cost <= tol * previous)
        previous = cost
        if converged or unchanged:
            break

    centroids = centers[:, : ds.dim].copy()
    quality_centers = _cluster_means(ds.qualities.reshape(-1, 1), assignments, l).reshape(-1)
    wcss = combined_objective(ds, assignments, centroids, quality_centers, quality_weight)
    history.append(wcss)
    logger.info("k-means: l=%d, %d iterations, objective %.6g", l, iterations, wcss)
    return ClusterModel(
        l=l,
        centroids=centroids,
        quality_centers=quality_centers,
        assignments=assignments,
        quality_weight=quality_weight,
        wcss=wcss,
        iterations_run=iterations,
        wcss_history=history,
        seed=seed,
    )


def summarize_groups(
    ds: Dataset,
    groups: Sequence[Sequence[int]],
    centroids: Optional[np.ndarray] = None,
) -> list[ClusterSummary]:
    """
    Summarize item groups (clusters or partitions).

    Args:
        ds: Dataset the ids refer to
        groups: Member ids per group; empty groups are skipped
        centroids: Optional centroid per group (defaults to the member mean)

    Returns:
        One ClusterSummary per non-empty group, cluster_id being the group index
    """
    summaries = []
    for cluster_id, group in enumerate(groups):
        members = np.sort(ds.check_ids(group))
        if members.size == 0:
            continue
        points = ds.embeddings[members]
        center = centroids[cluster_id] if centroids is not None else points.mean(axis=0)
        summaries.append(
            ClusterSummary(
                cluster_id=cluster_id,
                centroid=np.asarray(center, dtype=np.float64).tolist(),
                median_quality=float(np.median(ds.qualities[members])),
                radius=float(distances_to(points, center).max()),
                member_ids=members.tolist(),
                size=int(members.size),
            )
        )
    return summaries


def summarize_clusters(ds: Dataset, model: ClusterModel) -> list[ClusterSummary]:
    """Per-cluster centroid, median quality, radius and members."""
    if model.n != ds.n or model.dim != ds.dim:
        raise MussError(
            f"Model was trained on n={model.n}, d={model.dim}; dataset has n={ds.n}, d={ds.dim}"
        )
    order = np.argsort(model.assignments, kind="stable")
    counts = np.bincount(model.assignments, minlength=model.l)
    groups = np.split(order, np.cumsum(counts)[:-1])
    return summarize_groups(ds, groups, model.centroids)


def max_radius(summaries: Sequence[ClusterSummary]) -> float:
    """Largest member-to-centroid distance over all clusters."""
    return max((summary.radius for summary in summaries), default=0.0)


def random_partition(ds: Dataset, l: int, seed: int) -> list[list[int]]:
    """
    Uniformly random balanced partition of the ids into l parts (sizes differ by at most 1).

    Each part is sorted ascending; the result is deterministic for a given seed.
    """
    if not 1 <= l <= ds.n:
        raise MussError(f"Number of parts must be in [1, {ds.n}], got {l}")
    rng = np.random.default_rng(seed)
    shuffled = rng.permutation(ds.n)
    return [np.sort(part).tolist() for part in np.array_split(shuffled, l)]
