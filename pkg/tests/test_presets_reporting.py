import json

import numpy as np
import pytest

from muss.clustering import kmeans_fit, summarize_clusters
from muss.core import Criterion
from muss.oracle import VerifySuite, verify_lemma8_suite
from muss.presets import Preset, load_preset, save_preset
from muss.reporting import ClusterReport, SelectionReport, VerifyFileReport
from muss.selectors import Method, MethodConfig, run_method


def test_default_preset_ships():
    preset = load_preset("default")
    assert preset.k == 50
    assert preset.l == 100
    assert preset.criterion is Criterion.SUM_DISTANCE


def test_preset_round_trip(tmp_path):
    preset = Preset(name="tight", k=5, lambda_=0.8, criterion="min", workers=4)
    path = save_preset(preset, tmp_path)
    assert path == tmp_path / "tight.json"
    data = json.loads(path.read_text())
    assert data["lambda"] == 0.8
    assert "l" not in data
    assert load_preset("tight", tmp_path) == preset
    assert load_preset(str(path)) == preset


def test_missing_preset(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_preset("nope", tmp_path)


def test_selection_report(tmp_path, small_ds):
    result = run_method(small_ds, Method.MUSS, MethodConfig(k=4, k_within=3, l=3, m=5))
    report = SelectionReport.from_result(result, tmp_path / "in.bin")
    report.save(tmp_path / "out" / "result.json")
    data = json.loads((tmp_path / "out" / "result.json").read_text())
    assert data["schema"] == "muss-result/1"
    assert data["selected"] == result.selected
    assert data["lambda"] == 0.5
    assert data["precision"] is None
    assert "clustering" in data["stage_times"]
    assert data["warnings"]


def test_cluster_report_loads_back(tmp_path, small_ds):
    model = kmeans_fit(small_ds, 3, seed=2)
    report = ClusterReport(
        input="in.bin",
        model=model,
        mean_sq_distance=model.mean_sq_distance,
        summaries=summarize_clusters(small_ds, model),
        params={"l": 3},
    )
    report.save(tmp_path / "model.json")
    data = json.loads((tmp_path / "model.json").read_text())
    assert data["schema"] == "muss-model/1"
    assert len(data["summaries"]) == 3
    loaded = ClusterReport.load_model(tmp_path / "model.json")
    np.testing.assert_array_equal(loaded.assignments, model.assignments)
    np.testing.assert_allclose(loaded.centroids, model.centroids)


def test_bare_model_file_loads(tmp_path, small_ds):
    model = kmeans_fit(small_ds, 2, seed=0)
    model.save(tmp_path / "bare.json")
    assert ClusterReport.load_model(tmp_path / "bare.json").l == 2


def test_verify_file_report(tmp_path):
    report = verify_lemma8_suite(VerifySuite(n=8, k=3, trials=3))
    file_report = VerifyFileReport.from_report(report)
    file_report.save(tmp_path / "verify.json")
    data = json.loads((tmp_path / "verify.json").read_text())
    assert data["schema"] == "muss-verify/1"
    assert data["passed"] is True
    assert data["violations"] == 0
    assert data["summary"]["lemma8-sweep"]["passed"] == 3
    assert len(data["checks"]) == 6
