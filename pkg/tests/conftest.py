"""Shared fixtures."""

import numpy as np
import pytest
from typer.testing import CliRunner

from muss.bench import SyntheticSpec, generate, generate_with_components
from muss.core import Dataset
from tests.helpers import random_dataset


@pytest.fixture
def small_ds() -> Dataset:
    return random_dataset(20, dim=3, seed=7)


@pytest.fixture
def blob_spec() -> SyntheticSpec:
    return SyntheticSpec(
        n=400,
        dim=4,
        blobs=4,
        blob_spread=0.5,
        blob_separation=50.0,
        quality_model="blob_biased",
        relevant_fraction=0.2,
        seed=3,
    )


@pytest.fixture
def blob_ds(blob_spec) -> Dataset:
    return generate(blob_spec)


@pytest.fixture
def blob_components(blob_spec) -> np.ndarray:
    return generate_with_components(blob_spec)[1]


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()
