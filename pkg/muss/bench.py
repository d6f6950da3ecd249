"""Synthetic data, precision@k and the benchmark harness."""

import itertools
import json
import logging
import zlib
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from muss.core import Criterion, Dataset, SelectionResult
from muss.errors import MussError
from muss.selectors.registry import Method, MethodConfig, run_method

logger = logging.getLogger(__name__)

# Grid axes each method actually reads; the others are recorded as empty.
_AXES: dict[Method, tuple[str, ...]] = {
    Method.MMR: ("lambda",),
    Method.MUSS: ("lambda", "lambda_c", "l", "m"),
    Method.MUSS_PRIME: ("lambda", "lambda_c", "l", "m"),
    Method.RAND_A: ("lambda", "l", "m"),
    Method.RAND_B: ("lambda", "lambda_c", "l", "m"),
    Method.DGDS: ("lambda", "l"),
    Method.RANDOM: ("lambda",),
    Method.TOPK: ("lambda",),
    Method.CLUSTER_REPS: ("lambda",),
}
GROUP_COLUMNS = ["method", "lambda", "lambda_c", "l", "m"]
METRIC_COLUMNS = [
    "precision",
    "objective_mean_scaled",
    "quality_mean",
    "diversity_mean",
    "wall_time_ms",
]


class QualityModel(str, Enum):
    UNIFORM = "uniform"
    BLOB_BIASED = "blob_biased"


class SyntheticSpec(BaseModel):
    """Gaussian-mixture generator settings."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    dim: int = Field(default=8, ge=1)
    blobs: int = Field(default=4, ge=1)
    blob_spread: float = Field(default=1.0, gt=0.0)
    blob_separation: float = Field(default=10.0, ge=0.0)
    quality_model: QualityModel = QualityModel.UNIFORM
    relevant_fraction: float = Field(default=0.0, ge=0.0, le=1.0)
    label_noise: float = Field(default=0.1, ge=0.0, le=1.0)
    seed: int = 0

    @model_validator(mode="after")
    def _enough_items(self) -> "SyntheticSpec":
        if self.blobs > self.n:
            raise ValueError(f"blobs ({self.blobs}) cannot exceed n ({self.n})")
        return self


def generate_with_components(spec: SyntheticSpec) -> tuple[Dataset, np.ndarray]:
    """
    Sample a dataset and return it with the blob index of every item.

    Blob sizes differ by at most one. Qualities lie in (0, 1]; with blob_biased each blob
    gets its own quality mean. When relevant_fraction > 0 the top-quality fraction is
    labeled relevant and each label is then flipped with probability label_noise.
    """
    rng = np.random.default_rng(spec.seed)
    centers = rng.normal(scale=spec.blob_separation, size=(spec.blobs, spec.dim))
    components = rng.permutation(np.arange(spec.n) % spec.blobs)
    embeddings = centers[components] + rng.normal(scale=spec.blob_spread, size=(spec.n, spec.dim))

    if spec.quality_model is QualityModel.BLOB_BIASED:
        blob_means = rng.permutation(np.linspace(0.2, 0.8, spec.blobs))
        raw = blob_means[components] + rng.normal(scale=0.1, size=spec.n)
        qualities = np.clip(raw, 1e-3, 1.0)
    else:
        qualities = 1.0 - rng.random(spec.n)

    labels: Optional[np.ndarray] = None
    if spec.relevant_fraction > 0:
        relevant = int(round(spec.relevant_fraction * spec.n))
        labels = np.zeros(spec.n, dtype=bool)
        labels[np.argsort(-qualities, kind="stable")[:relevant]] = True
        labels ^= rng.random(spec.n) < spec.label_noise

    return Dataset(embeddings, qualities, labels), components


def generate(spec: SyntheticSpec) -> Dataset:
    """Deterministic Gaussian-mixture dataset for a spec."""
    return generate_with_components(spec)[0]


def precision_at_k(ds: Dataset, result: SelectionResult) -> float:
    """Fraction of selected items labeled relevant."""
    if not ds.has_labels:
        raise MussError("Precision needs relevance labels; dataset has none")
    if not result.selected:
        return 0.0
    ids = ds.check_ids(result.selected)
    return float(ds.labels[ids].mean())


class BenchGrid(BaseModel):
    """Fixed settings plus the swept axes of a benchmark."""

    model_config = ConfigDict(frozen=True)

    k: int = Field(default=10, ge=1)
    k_within: int = Field(default=10, ge=1)
    lambdas: list[float] = Field(default_factory=lambda: [0.5])
    lambda_cs: list[float] = Field(default_factory=lambda: [0.5])
    ls: list[int] = Field(default_factory=lambda: [10])
    ms: list[int] = Field(default_factory=lambda: [3])
    criterion: Criterion = Criterion.SUM_DISTANCE
    normalize_by_size: bool = True
    sigma_sweep: bool = False
    quality_weight: float = Field(default=0.0, ge=0.0)
    workers: int = Field(default=1, ge=1)


class BenchRow(BaseModel):
    """One method run on one grid cell and repeat."""

    model_config = ConfigDict(populate_by_name=True)

    method: str
    repeat: int
    seed: int
    lambda_: float = Field(alias="lambda")
    lambda_c: Optional[float] = None
    l: Optional[int] = None
    m: Optional[int] = None
    k: int
    precision: Optional[float] = None
    objective: Optional[float] = None
    objective_mean_scaled: Optional[float] = None
    quality_mean: Optional[float] = None
    diversity_mean: Optional[float] = None
    wall_time_ms: Optional[float] = None
    stage_times: dict[str, float] = Field(default_factory=dict)
    selected: list[int] = Field(default_factory=list)
    failed: bool = False
    error: Optional[str] = None


class BenchReport(BaseModel):
    """Raw rows plus pandas views for aggregation and export."""

    rows: list[BenchRow] = Field(default_factory=list)

    @property
    def failures(self) -> int:
        return sum(row.failed for row in self.rows)

    def frame(self) -> pd.DataFrame:
        """One record per row, stage times flattened to stage_<name> columns."""
        records = []
        for row in self.rows:
            record = row.model_dump(by_alias=True, exclude={"stage_times", "selected"})
            record.update({f"stage_{name}": ms for name, ms in row.stage_times.items()})
            records.append(record)
        return pd.DataFrame.from_records(records)

    def aggregate(self) -> pd.DataFrame:
        """
        Mean, standard error and median per (method, lambda, lambda_c, l, m).

        Failed rows are counted but excluded from the statistics. Standard error is NaN
        for groups with fewer than two successful repeats. Axes a method ignores are blank.
        """
        frame = self.frame()
        if frame.empty:
            return pd.DataFrame(columns=GROUP_COLUMNS)
        keys = frame[GROUP_COLUMNS].astype({"l": "Int64", "m": "Int64"}).astype(object)
        frame[GROUP_COLUMNS] = keys.where(keys.notna(), "")
        stage_columns = sorted(c for c in frame.columns if c.startswith("stage_"))
        metrics = METRIC_COLUMNS + stage_columns
        frame = frame.astype({c: float for c in metrics})

        counts = frame.groupby(GROUP_COLUMNS, sort=False).agg(
            runs=("failed", "size"), failed=("failed", "sum")
        )
        ok = frame[~frame["failed"]]
        if ok.empty:
            return counts.reset_index()
        grouped = ok.groupby(GROUP_COLUMNS, sort=False)[metrics]
        means = grouped.mean().add_suffix("_mean")
        stderr = (grouped.std(ddof=1) / np.sqrt(grouped.count())).add_suffix("_stderr")
        medians = grouped.median()[["wall_time_ms"]].add_suffix("_median")
        return counts.join([means, stderr, medians]).reset_index()

    def save_csv(self, path: Path) -> None:
        """Write the aggregated table."""
        path.parent.mkdir(parents=True, exist_ok=True)
        self.aggregate().to_csv(path, index=False)

    def save_json(self, path: Path) -> None:
        """Write rows and the aggregated table."""
        path.parent.mkdir(parents=True, exist_ok=True)
        aggregate = json.loads(self.aggregate().to_json(orient="records"))
        payload = {
            "schema": "muss-bench/1",
            "rows": [row.model_dump(mode="json", by_alias=True) for row in self.rows],
            "aggregate": aggregate,
        }
        with open(path, "w") as f:
            json.dump(payload, f, indent=2)


def derive_seed(master: int, method: str, cell: int, repeat: int) -> int:
    """
    Seed for one (method, cell, repeat).

    Keyed on a CRC32 of the method name, so adding or reordering methods does not move
    the seeds of the others.
    """
    entropy = [master, zlib.crc32(method.encode("utf-8")), cell, repeat]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def _cells(grid: BenchGrid) -> list[dict[str, float]]:
    return [
        {"lambda": lam, "lambda_c": lam_c, "l": l, "m": m}
        for lam, lam_c, l, m in itertools.product(grid.lambdas, grid.lambda_cs, grid.ls, grid.ms)
    ]


def _config(grid: BenchGrid, cell: dict, seed: int) -> MethodConfig:
    return MethodConfig(
        k=grid.k,
        k_within=grid.k_within,
        l=cell["l"],
        m=cell["m"],
        lambda_=cell["lambda"],
        lambda_c=cell["lambda_c"],
        criterion=grid.criterion,
        normalize_by_size=grid.normalize_by_size,
        sigma_sweep=grid.sigma_sweep,
        quality_weight=grid.quality_weight,
        workers=grid.workers,
        seed=seed,
    )


def _row(
    ds: Dataset, method: Method, cell: dict, repeat: int, seed: int, config: MethodConfig
) -> BenchRow:
    axes = _AXES[method]
    row = BenchRow(
        method=method.value,
        repeat=repeat,
        seed=seed,
        lambda_=cell["lambda"],
        lambda_c=cell["lambda_c"] if "lambda_c" in axes else None,
        l=cell["l"] if "l" in axes else None,
        m=cell["m"] if "m" in axes else None,
        k=config.k,
    )
    try:
        result = run_method(ds, method, config)
    except Exception as e:
        logger.warning("%s failed on cell %s repeat %d: %s", method.value, cell, repeat, e)
        row.failed = True
        row.error = str(e)
        return row

    row.precision = precision_at_k(ds, result) if ds.has_labels else None
    row.objective = result.objective
    row.objective_mean_scaled = result.objective_mean_scaled
    row.quality_mean = result.quality_mean
    row.diversity_mean = result.diversity_mean
    row.wall_time_ms = result.wall_time_ms
    row.stage_times = result.stage_times
    row.selected = result.selected
    return row


def run_benchmark(
    ds: Dataset,
    methods: Sequence[Method | str],
    grid: BenchGrid,
    repeats: int = 5,
    seed: int = 0,
    warmup: bool = True,
) -> BenchReport:
    """
    Run every method on every grid cell `repeats` times, sequentially.

    Each method runs once on its first cell before timing starts and that run is
    discarded. Grid axes a method ignores are collapsed so it runs once per distinct
    setting. A failing run becomes a failed row; the harness continues.

    Raises:
        MussError: If no methods are given or a name is unknown
    """
    if not methods:
        raise MussError("At least one method is required")
    if repeats < 1:
        raise MussError("repeats must be at least 1")
    try:
        resolved = [Method(method) for method in methods]
    except ValueError as e:
        raise MussError(str(e)) from None

    report = BenchReport()
    cells = _cells(grid)
    for method in resolved:
        seen: set[tuple] = set()
        warmed = not warmup
        for index, cell in enumerate(cells):
            key = tuple(cell[axis] for axis in _AXES[method])
            if key in seen:
                continue
            seen.add(key)
            if not warmed:
                warm_seed = derive_seed(seed, method.value, index, repeats)
                try:
                    run_method(ds, method, _config(grid, cell, warm_seed))
                except Exception as e:
                    logger.debug("Warm-up run of %s failed: %s", method.value, e)
                warmed = True
            for repeat in range(repeats):
                run_seed = derive_seed(seed, method.value, index, repeat)
                config = _config(grid, cell, run_seed)
                report.rows.append(_row(ds, method, cell, repeat, run_seed, config))
        logger.info("Benchmarked %s over %d cell(s)", method.value, len(seen))
    return report
