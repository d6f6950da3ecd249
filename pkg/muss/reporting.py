"""JSON reporting for selection, clustering and verification runs."""

import json
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field

from muss.clustering import ClusterModel, ClusterSummary
from muss.core import SelectionResult
from muss.oracle import TrialCheck, VerifyReport

RESULT_SCHEMA = "muss-result/1"
MODEL_SCHEMA = "muss-model/1"
VERIFY_SCHEMA = "muss-verify/1"


class _Report(BaseModel):
    def save(self, output_path: Path) -> None:
        """Save report to JSON file."""
        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, "w") as f:
            json.dump(self.model_dump(mode="json", by_alias=True), f, indent=2)


class SelectionReport(_Report):
    """Selection result plus provenance, as written by `muss select`."""

    model_config = ConfigDict(populate_by_name=True)

    schema_: str = Field(default=RESULT_SCHEMA, alias="schema")
    input: str
    method: str
    k: int
    selected: list[int]
    lambda_: float = Field(alias="lambda")
    objective: float
    quality_term: float
    diversity_term: float
    objective_mean_scaled: float
    quality_mean: float
    diversity_mean: float
    precision: Optional[float] = None
    wall_time_ms: float
    stage_times: dict[str, float]
    params: dict[str, Any]
    warnings: list[str] = Field(default_factory=list)

    @classmethod
    def from_result(
        cls, result: SelectionResult, input_path: Path, precision: Optional[float] = None
    ) -> "SelectionReport":
        return cls(
            input=str(input_path),
            method=result.method,
            k=len(result.selected),
            selected=result.selected,
            lambda_=result.lambda_,
            objective=result.objective,
            quality_term=result.quality_term,
            diversity_term=result.diversity_term,
            objective_mean_scaled=result.objective_mean_scaled,
            quality_mean=result.quality_mean,
            diversity_mean=result.diversity_mean,
            precision=precision,
            wall_time_ms=result.wall_time_ms,
            stage_times=result.stage_times,
            params=result.params_echo,
            warnings=result.warnings,
        )


class ClusterReport(_Report):
    """Trained model plus per-cluster summaries; loadable back into a ClusterModel."""

    model_config = ConfigDict(populate_by_name=True, arbitrary_types_allowed=True)

    schema_: str = Field(default=MODEL_SCHEMA, alias="schema")
    input: str
    model: ClusterModel
    mean_sq_distance: float
    summaries: list[ClusterSummary]
    params: dict[str, Any]

    @classmethod
    def load_model(cls, path: Path) -> ClusterModel:
        """Read the model out of a report file (or a bare model file)."""
        with open(path, "r") as f:
            data = json.load(f)
        return ClusterModel.model_validate(data.get("model", data))


class VerifyFileReport(_Report):
    """Verification outcome with per-trial slack, as written by `muss verify`."""

    model_config = ConfigDict(populate_by_name=True)

    schema_: str = Field(default=VERIFY_SCHEMA, alias="schema")
    suite: str
    params: dict[str, Any]
    trials: int
    passed: bool
    violations: int
    summary: dict[str, dict[str, float]]
    checks: list[TrialCheck]

    @classmethod
    def from_report(cls, report: VerifyReport) -> "VerifyFileReport":
        return cls(
            suite=report.suite,
            params=report.params,
            trials=report.trials,
            passed=report.passed,
            violations=len(report.violations),
            summary=report.summary(),
            checks=report.checks,
        )
