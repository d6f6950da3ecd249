import json

import pytest

from muss import __version__
from muss.cli import app
from muss.oracle import TrialCheck, VerifyReport


def invoke(runner, *args, **kwargs):
    return runner.invoke(app, [str(arg) for arg in args], **kwargs)


@pytest.fixture
def dataset(tmp_path, runner):
    path = tmp_path / "ds.bin"
    result = invoke(
        runner, "gen", "--n", 300, "--dim", 4, "--blobs", 3, "--relevant-frac", 0.2,
        "--seed", 1, "--out", path,
    )
    assert result.exit_code == 0, result.output
    return path


def select(runner, dataset, tmp_path, *args, name="result.json"):
    out = tmp_path / name
    result = invoke(runner, "select", "--input", dataset, "--out", out, *args)
    assert result.exit_code == 0, result.output
    return json.loads(out.read_text())


def test_gen_file_sizes(tmp_path, runner):
    assert invoke(runner, "gen", "--n", 100, "--dim", 4, "--out", tmp_path / "a.bin").exit_code == 0
    assert (tmp_path / "a.bin").stat().st_size == 2024
    invoke(
        runner, "gen", "--n", 100, "--dim", 4, "--relevant-frac", 0.3, "--out", tmp_path / "b.bin"
    )
    assert (tmp_path / "b.bin").stat().st_size == 2124


def test_gen_is_byte_identical(tmp_path, runner):
    for name in ("a.jsonl", "b.jsonl"):
        invoke(runner, "gen", "--n", 50, "--seed", 7, "--out", tmp_path / name)
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_select_topk(tmp_path, runner):
    path = tmp_path / "tiny.jsonl"
    records = [
        {"id": 0, "embedding": [0.0], "quality": 0.1},
        {"id": 1, "embedding": [1.0], "quality": 0.9},
        {"id": 2, "embedding": [2.0], "quality": 0.5},
    ]
    path.write_text("\n".join(json.dumps(r) for r in records))
    data = select(runner, path, tmp_path, "--method", "topk", "--k", 2)
    assert data["selected"] == [1, 2]
    assert data["method"] == "topk"
    assert data["precision"] is None


def test_mmr_lambda_one_matches_topk(dataset, tmp_path, runner):
    mmr = select(runner, dataset, tmp_path, "--method", "mmr", "--k", 8, "--lambda", 1.0)
    topk = select(runner, dataset, tmp_path, "--method", "topk", "--k", 8, name="topk.json")
    assert mmr["selected"] == topk["selected"]
    assert 0.0 <= mmr["precision"] <= 1.0


def test_select_workers_do_not_change_result(dataset, tmp_path, runner):
    args = ("--method", "muss", "--k", 10, "--kw", 5, "--l", 6, "--m", 3, "--seed", 2)
    one = select(runner, dataset, tmp_path, *args, "--workers", 1, name="one.json")
    many = select(runner, dataset, tmp_path, *args, "--workers", 4, name="many.json")
    assert one["selected"] == many["selected"]
    out = tmp_path / "env.json"
    result = invoke(
        runner, "select", "--input", dataset, "--out", out, *args, env={"MUSS_WORKERS": "3"}
    )
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text())
    assert data["params"]["workers"] == 3
    assert data["selected"] == one["selected"]


def test_select_missing_flags(dataset, runner):
    result = invoke(runner, "select", "--input", dataset, "--method", "muss", "--k", 5)
    assert result.exit_code == 1
    assert "--l, --m, --kw" in result.output
    result = invoke(runner, "select", "--input", dataset, "--method", "mmr")
    assert result.exit_code == 1
    assert "--k" in result.output


def test_select_with_trained_model(dataset, tmp_path, runner):
    model = tmp_path / "model.json"
    result = invoke(runner, "cluster", "--input", dataset, "--l", 5, "--model-out", model)
    assert result.exit_code == 0, result.output
    assert json.loads(model.read_text())["schema"] == "muss-model/1"
    data = select(
        runner, dataset, tmp_path, "--method", "muss", "--k", 6, "--kw", 4, "--m", 2,
        "--model", model,
    )
    assert data["params"]["l"] == 5
    assert data["stage_times"]["clustering"] == 0.0


def test_select_preset_and_flag_override(dataset, tmp_path, runner):
    preset = tmp_path / "small.json"
    preset.write_text(json.dumps({"name": "small", "k": 4, "lambda": 0.9, "seed": 3}))
    data = select(runner, dataset, tmp_path, "--method", "mmr", "--preset", preset, "--k", 6)
    assert len(data["selected"]) == 6
    assert data["lambda"] == 0.9


def test_select_clamps_k(tmp_path, runner):
    path = tmp_path / "few.bin"
    invoke(runner, "gen", "--n", 5, "--blobs", 1, "--out", path)
    data = select(runner, path, tmp_path, "--method", "mmr", "--k", 9)
    assert sorted(data["selected"]) == [0, 1, 2, 3, 4]


def test_select_runtime_errors(tmp_path, runner):
    none = tmp_path / "none.bin"
    missing = invoke(runner, "select", "--input", none, "--method", "topk", "--k", 1)
    assert missing.exit_code == 2
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"NOPE" + bytes(40))
    result = invoke(runner, "select", "--input", bad, "--method", "topk", "--k", 1)
    assert result.exit_code == 2
    assert "magic" in result.output


def test_select_malformed_model_json(dataset, tmp_path, runner):
    model = tmp_path / "model.json"
    model.write_text("{not json")
    result = invoke(
        runner, "select", "--input", dataset, "--method", "muss", "--k", 4, "--kw", 3,
        "--m", 2, "--model", model,
    )
    assert result.exit_code == 2
    assert "Malformed JSON" in result.output


def test_select_stage_lambda_overrides(dataset, tmp_path, runner):
    data = select(
        runner, dataset, tmp_path, "--method", "muss", "--k", 6, "--kw", 4, "--l", 5, "--m", 2,
        "--lambda-within", 0.2, "--lambda-final", 0.9,
    )
    assert data["params"]["lambda"] == 0.5
    assert data["params"]["lambda_within"] == 0.2
    assert data["params"]["lambda_final"] == 0.9
    assert data["lambda"] == 0.5


def test_unknown_method_is_a_parse_error(dataset, runner):
    result = invoke(runner, "select", "--input", dataset, "--method", "bogus", "--k", 1)
    assert result.exit_code == 2


def test_verify_passes(tmp_path, runner):
    out = tmp_path / "verify.json"
    result = invoke(runner, "verify", "--suite", "lemma8", "--n", 9, "--trials", 5, "--out", out)
    assert result.exit_code == 0, result.output
    assert json.loads(out.read_text())["passed"] is True


def test_verify_zero_trials(runner):
    result = invoke(runner, "verify", "--suite", "theorem4", "--trials", 0)
    assert result.exit_code == 0
    assert "All 0 trial(s) passed" in result.output


def test_verify_usage_errors(runner):
    assert invoke(runner, "verify", "--suite", "theorem5", "--m", 1).exit_code == 1
    assert invoke(runner, "verify", "--suite", "lemma1", "--lambda", 1.0).exit_code == 1
    capped = invoke(runner, "verify", "--suite", "theorem4", "--n", 40, "--k", 10, "--cap", 100)
    assert capped.exit_code == 1


def test_verify_reports_violations(monkeypatch, tmp_path, runner):
    def broken(suite):
        check = TrialCheck(
            trial=0, bound="lemma8-sweep", lhs=0.1, rhs=1.0, slack=-0.9, passed=False,
            instance_seed=0,
        )
        return VerifyReport(suite="lemma8", params={}, trials=1, checks=[check])

    monkeypatch.setattr("muss.cli.verify_lemma8_suite", broken)
    out = tmp_path / "verify.json"
    result = invoke(runner, "verify", "--suite", "lemma8", "--trials", 1, "--out", out)
    assert result.exit_code == 3
    assert json.loads(out.read_text())["violations"] == 1


def test_inspect(dataset, runner):
    result = invoke(runner, "inspect", dataset)
    assert result.exit_code == 0
    assert "300" in result.output
    assert "6324" in result.output


def test_version(runner):
    result = invoke(runner, "version")
    assert result.exit_code == 0
    assert __version__ in result.output


def test_bench_from_generator_spec(tmp_path, runner):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"n": 200, "dim": 4, "blobs": 3, "relevant_fraction": 0.2}))
    csv = tmp_path / "bench.csv"
    plot = tmp_path / "stages.png"
    result = invoke(
        runner, "bench", "--gen-spec", spec, "--methods", "muss,dgds,topk", "--k", 5,
        "--kw", 5, "--l", 4, "--m", 2, "--repeats", 2, "--out-csv", csv, "--out-plot", plot,
    )
    assert result.exit_code == 0, result.output
    header = csv.read_text().splitlines()[0]
    assert "objective_mean_scaled_mean" in header
    assert len(csv.read_text().splitlines()) == 4
    assert plot.stat().st_size > 0


def test_bench_argument_errors(dataset, tmp_path, runner):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"n": 20}))
    both = invoke(runner, "bench", "--input", dataset, "--gen-spec", spec, "--methods", "mmr")
    assert both.exit_code == 1
    neither = invoke(runner, "bench", "--methods", "mmr")
    assert neither.exit_code == 1
    unknown = invoke(runner, "bench", "--input", dataset, "--methods", "mmr,nope")
    assert unknown.exit_code == 1


def test_bench_malformed_generator_spec(tmp_path, runner):
    spec = tmp_path / "spec.json"
    spec.write_text('{"n": 20,')
    result = invoke(runner, "bench", "--gen-spec", spec, "--methods", "mmr")
    assert result.exit_code == 2
    assert "Malformed JSON" in result.output


def test_bench_all_runs_failing(dataset, runner):
    result = invoke(
        runner, "bench", "--input", dataset, "--methods", "muss", "--l", 1000, "--repeats", 1
    )
    assert result.exit_code == 2
