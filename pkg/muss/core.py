"""Domain types, the distance metric and the quality-plus-diversity objective."""

from enum import Enum
from typing import Any, Iterable, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from muss.errors import DimensionMismatchError, InvalidSelectionError, MussError

# Row block used when materializing pairwise distances.
_PAIRWISE_BLOCK = 256


class Criterion(str, Enum):
    """Greedy gain criterion."""

    SUM_DISTANCE = "sum"
    MIN_DISTANCE = "min"


class Item(BaseModel):
    """A single embedding with its quality score."""

    model_config = ConfigDict(frozen=True)

    id: int = Field(ge=0)
    embedding: list[float]
    quality: float = Field(ge=0.0)
    label: Optional[bool] = None

    def vector(self) -> np.ndarray:
        return np.asarray(self.embedding, dtype=np.float64)


class Dataset:
    """Immutable, indexed collection of items (ids are row indices)."""

    def __init__(
        self,
        embeddings: np.ndarray,
        qualities: np.ndarray,
        labels: Optional[np.ndarray] = None,
    ):
        """
        Build a dataset from arrays.

        Args:
            embeddings: n x d array of embedding coordinates
            qualities: n non-negative quality scores
            labels: optional n binary relevance labels

        Raises:
            MussError: If shapes disagree or values are not finite / negative
        """
        emb = np.array(embeddings, dtype=np.float64, copy=True)
        if emb.ndim == 1:
            emb = emb.reshape(-1, 1) if emb.size else emb.reshape(0, 0)
        if emb.ndim != 2:
            raise MussError(f"Embeddings must be a 2-D array, got shape {emb.shape}")
        qual = np.array(qualities, dtype=np.float64, copy=True).reshape(-1)
        if qual.shape[0] != emb.shape[0]:
            raise MussError(
                f"Got {emb.shape[0]} embeddings but {qual.shape[0]} quality scores"
            )
        if not np.all(np.isfinite(emb)):
            raise MussError("Embeddings contain non-finite values")
        if not np.all(np.isfinite(qual)):
            raise MussError("Quality scores contain non-finite values")
        if np.any(qual < 0):
            raise MussError("Quality scores must be non-negative")

        lab: Optional[np.ndarray] = None
        if labels is not None:
            lab = np.array(labels, dtype=bool, copy=True).reshape(-1)
            if lab.shape[0] != emb.shape[0]:
                raise MussError(f"Got {emb.shape[0]} items but {lab.shape[0]} labels")
            lab.setflags(write=False)

        emb.setflags(write=False)
        qual.setflags(write=False)
        self._embeddings = emb
        self._qualities = qual
        self._labels = lab

    @classmethod
    def from_items(cls, items: Sequence[Item]) -> "Dataset":
        """Build a dataset from items whose ids are exactly 0..n-1 in order."""
        for position, item in enumerate(items):
            if item.id != position:
                raise MussError(
                    f"Item ids must be 0..n-1 in order; position {position} has id {item.id}"
                )
        dims = {len(item.embedding) for item in items}
        if len(dims) > 1:
            first = len(items[0].embedding)
            bad = next(item for item in items if len(item.embedding) != first)
            raise DimensionMismatchError(first, len(bad.embedding))
        has_labels = any(item.label is not None for item in items)
        embeddings = np.array([item.embedding for item in items], dtype=np.float64)
        if not items:
            embeddings = embeddings.reshape(0, 0)
        labels = np.array([bool(item.label) for item in items]) if has_labels else None
        return cls(embeddings, [item.quality for item in items], labels)

    @property
    def embeddings(self) -> np.ndarray:
        return self._embeddings

    @property
    def qualities(self) -> np.ndarray:
        return self._qualities

    @property
    def labels(self) -> Optional[np.ndarray]:
        return self._labels

    @property
    def n(self) -> int:
        return int(self._embeddings.shape[0])

    @property
    def dim(self) -> int:
        return int(self._embeddings.shape[1])

    @property
    def has_labels(self) -> bool:
        return self._labels is not None

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"Dataset(n={self.n}, dim={self.dim}, has_labels={self.has_labels})"

    def item(self, item_id: int) -> Item:
        """Materialize one item."""
        if not 0 <= item_id < self.n:
            raise InvalidSelectionError(f"Item id {item_id} out of range [0, {self.n})")
        label = bool(self._labels[item_id]) if self._labels is not None else None
        return Item(
            id=item_id,
            embedding=self._embeddings[item_id].tolist(),
            quality=float(self._qualities[item_id]),
            label=label,
        )

    def items(self) -> list[Item]:
        return [self.item(i) for i in range(self.n)]

    def check_ids(self, ids: Iterable[int]) -> np.ndarray:
        """
        Validate ids and return them as an int64 array (order preserved).

        Raises:
            InvalidSelectionError: On out-of-range or duplicate ids
        """
        arr = np.asarray(list(ids), dtype=np.int64)
        if arr.size == 0:
            return arr
        if arr.min() < 0 or arr.max() >= self.n:
            bad = int(arr[(arr < 0) | (arr >= self.n)][0])
            raise InvalidSelectionError(f"Item id {bad} out of range [0, {self.n})")
        if np.unique(arr).size != arr.size:
            raise InvalidSelectionError("Selection contains duplicate ids")
        return arr

    def l2_normalized(self) -> "Dataset":
        """Copy with every embedding scaled to unit length (zero vectors kept)."""
        norms = np.linalg.norm(self._embeddings, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return Dataset(self._embeddings / norms, self._qualities, self._labels)

    def scaled(self, factor: float) -> "Dataset":
        """Copy with every embedding multiplied by `factor`."""
        return Dataset(self._embeddings * factor, self._qualities, self._labels)


class SelectionParams(BaseModel):
    """Parameters of a single greedy selection."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    k: int = Field(ge=1)
    lambda_: float = Field(default=0.5, ge=0.0, le=1.0, alias="lambda")
    criterion: Criterion = Criterion.SUM_DISTANCE
    sigma: float = Field(default=1.0, ge=0.0)
    normalize_by_size: bool = True


class SelectionResult(BaseModel):
    """Outcome of a selection: picks in order plus the objective decomposition."""

    model_config = ConfigDict(populate_by_name=True)

    method: str = "greedy"
    selected: list[int]
    lambda_: float = Field(ge=0.0, le=1.0, alias="lambda")
    objective: float
    quality_term: float
    diversity_term: float
    objective_mean_scaled: float
    quality_mean: float
    diversity_mean: float
    wall_time_ms: float = 0.0
    stage_times: dict[str, float] = Field(default_factory=dict)
    params_echo: dict[str, Any] = Field(default_factory=dict)
    warnings: list[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_consistency(self) -> "SelectionResult":
        if len(set(self.selected)) != len(self.selected):
            raise ValueError("selected contains duplicate ids")
        expected = self.lambda_ * self.quality_term + (1 - self.lambda_) * self.diversity_term
        if abs(expected - self.objective) > 1e-9 * max(1.0, abs(self.objective)):
            raise ValueError("objective does not match lambda*Q + (1-lambda)*D")
        return self


def distance(a: Item, b: Item) -> float:
    """Euclidean distance between two items."""
    if len(a.embedding) != len(b.embedding):
        raise DimensionMismatchError(len(a.embedding), len(b.embedding))
    return float(np.linalg.norm(a.vector() - b.vector()))


def distances_to(points: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Euclidean distance from every row of `points` to `target`."""
    return np.linalg.norm(points - target, axis=1)


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    """Full Euclidean distance matrix, computed by explicit differences in row blocks."""
    n = points.shape[0]
    out = np.empty((n, n), dtype=np.float64)
    for start in range(0, n, _PAIRWISE_BLOCK):
        block = points[start : start + _PAIRWISE_BLOCK]
        out[start : start + block.shape[0]] = np.linalg.norm(
            block[:, None, :] - points[None, :, :], axis=-1
        )
    return out


def quality_sum(ds: Dataset, selection: Sequence[int]) -> float:
    """Q(S): sum of qualities over the selection."""
    ids = ds.check_ids(selection)
    return float(ds.qualities[ids].sum())


def diversity_sum(ds: Dataset, selection: Sequence[int]) -> float:
    """D(S): sum of distances over ordered pairs (each unordered pair counted twice)."""
    ids = ds.check_ids(selection)
    if ids.size <= 1:
        return 0.0
    return float(pairwise_distances(ds.embeddings[ids]).sum())


def objective(ds: Dataset, selection: Sequence[int], lambda_: float) -> tuple[float, float, float]:
    """
    Evaluate F(S) = lambda*Q(S) + (1-lambda)*D(S).

    Returns:
        Tuple of (F, Q, D)
    """
    if not 0.0 <= lambda_ <= 1.0:
        raise MussError(f"lambda must be in [0, 1], got {lambda_}")
    quality = quality_sum(ds, selection)
    diversity = diversity_sum(ds, selection)
    return lambda_ * quality + (1 - lambda_) * diversity, quality, diversity


def mean_scaled(
    quality: float, diversity: float, size: int, lambda_: float
) -> tuple[float, float, float]:
    """
    Reporting convention: Q/|S|, D/(|S|(|S|-1)) and their lambda blend.

    Returns:
        Tuple of (objective_mean_scaled, quality_mean, diversity_mean)
    """
    quality_mean = quality / size if size else 0.0
    diversity_mean = diversity / (size * (size - 1)) if size > 1 else 0.0
    return lambda_ * quality_mean + (1 - lambda_) * diversity_mean, quality_mean, diversity_mean


def marginal_gain(
    ds: Dataset,
    selection: Sequence[int],
    t: int,
    lambda_: float,
    normalize: bool,
    sigma: float = 1.0,
) -> float:
    """
    Sum-distance greedy gain of adding `t` to the selection.

    Returns sigma*lambda*q(t) + (1-lambda)*G, where G is the summed distance from t
    to the selection, divided by |S| when `normalize` is set (G = 0 for empty S).
    """
    ids = ds.check_ids(selection)
    (target,) = ds.check_ids([t])
    if np.any(ids == target):
        raise InvalidSelectionError(f"Item {t} is already selected")
    spread = 0.0
    if ids.size:
        spread = float(distances_to(ds.embeddings[ids], ds.embeddings[target]).sum())
        if normalize:
            spread /= ids.size
    return sigma * lambda_ * float(ds.qualities[target]) + (1 - lambda_) * spread


def evaluate_selection(
    ds: Dataset,
    selection: Sequence[int],
    lambda_: float,
    *,
    method: str = "greedy",
    wall_time_ms: float = 0.0,
    stage_times: Optional[dict[str, float]] = None,
    params_echo: Optional[dict[str, Any]] = None,
    warnings: Optional[list[str]] = None,
) -> SelectionResult:
    """Wrap a finished selection into a SelectionResult with both objective conventions."""
    selected = [int(i) for i in selection]
    value, quality, diversity = objective(ds, selected, lambda_)
    scaled, quality_mean, diversity_mean = mean_scaled(quality, diversity, len(selected), lambda_)
    return SelectionResult(
        method=method,
        selected=selected,
        lambda_=lambda_,
        objective=value,
        quality_term=quality,
        diversity_term=diversity,
        objective_mean_scaled=scaled,
        quality_mean=quality_mean,
        diversity_mean=diversity_mean,
        wall_time_ms=wall_time_ms,
        stage_times=stage_times or {},
        params_echo=params_echo or {},
        warnings=warnings or [],
    )
