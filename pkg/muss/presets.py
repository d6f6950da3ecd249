"""Preset management for selection defaults."""

import json
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from muss.core import Criterion

PRESETS_DIR = Path(__file__).parent.parent / "presets"


class Preset(BaseModel):
    """Named bundle of selection and clustering defaults."""

    model_config = ConfigDict(populate_by_name=True)

    name: str
    k: Optional[int] = Field(default=None, ge=1)
    k_within: Optional[int] = Field(default=None, ge=1)
    lambda_: float = Field(default=0.5, ge=0.0, le=1.0, alias="lambda")
    lambda_c: float = Field(default=0.5, ge=0.0, le=1.0)
    l: Optional[int] = Field(default=None, ge=1)
    m: Optional[int] = Field(default=None, ge=1)
    criterion: Criterion = Criterion.SUM_DISTANCE
    normalize: bool = True
    workers: int = Field(default=1, ge=1)
    seed: int = 0
    quality_weight: float = Field(default=0.0, ge=0.0)
    max_iters: int = Field(default=100, ge=1)
    tol: float = Field(default=1e-6, gt=0.0)


def load_preset(preset: str, presets_dir: Optional[Path] = None) -> Preset:
    """
    Load preset from file.

    Args:
        preset: Name of a preset (e.g., "default") or a path to a JSON file
        presets_dir: Directory containing named presets (default: ./presets)

    Returns:
        Preset object

    Raises:
        FileNotFoundError: If preset file doesn't exist
    """
    if presets_dir is None:
        presets_dir = PRESETS_DIR

    preset_path = Path(preset)
    if preset_path.suffix != ".json":
        preset_path = presets_dir / f"{preset}.json"

    if not preset_path.exists():
        raise FileNotFoundError(f"Preset not found: {preset_path}")

    with open(preset_path, "r") as f:
        data = json.load(f)

    return Preset.model_validate(data)


def save_preset(preset: Preset, presets_dir: Optional[Path] = None) -> Path:
    """
    Save preset to file.

    Args:
        preset: Preset object
        presets_dir: Directory to save preset (default: ./presets)

    Returns:
        Path of the written file
    """
    if presets_dir is None:
        presets_dir = PRESETS_DIR

    presets_dir.mkdir(parents=True, exist_ok=True)
    preset_path = presets_dir / f"{preset.name}.json"

    with open(preset_path, "w") as f:
        json.dump(preset.model_dump(mode="json", by_alias=True, exclude_none=True), f, indent=2)
    return preset_path
