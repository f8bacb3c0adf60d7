import csv
import json

import pytest

from dpforest.cli import main
from dpforest.data import load_dataset, load_schema
from dpforest.forest import load_model


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """One generated dataset shared by the CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    data = root / "data.csv"
    schema = root / "schema.json"
    code = main([
        "gen", "--preset", "SynthF", "--n", "600", "--seed", "1",
        "--out", str(data), "--schema-out", str(schema),
    ])
    assert code == 0
    return {"root": root, "data": data, "schema": schema}


def test_gen_outputs_and_manifest(workspace):
    schema = load_schema(str(workspace["schema"]))
    data = load_dataset(str(workspace["data"]), schema)
    assert len(data) == 600
    assert schema.num_continuous == 10
    manifest = json.loads(
        (workspace["root"] / "data.csv.manifest.json").read_text(encoding="utf-8")
    )
    assert manifest["command"] == "gen"
    assert manifest["seed"] == 1
    assert manifest["arguments"]["n"] == 600
    assert str(workspace["data"]) in manifest["outputs"]
    assert str(workspace["schema"]) in manifest["outputs"]
    assert manifest["duration_seconds"] >= 0


def test_gen_with_explicit_feature_counts(tmp_path):
    code = main([
        "gen", "--informative", "3", "--random", "2", "--n", "40", "--seed", "0",
        "--out", str(tmp_path / "d.csv"), "--schema-out", str(tmp_path / "s.json"),
    ])
    assert code == 0
    schema = load_schema(str(tmp_path / "s.json"))
    assert schema.num_continuous == 5


def test_depth_prints_derived_depth(workspace, capsys):
    assert main(["depth", "--schema", str(workspace["schema"])]) == 0
    assert capsys.readouterr().out.strip() == "8"


def test_train_writes_model_and_manifest(workspace):
    model_path = workspace["root"] / "model.json"
    diag_path = workspace["root"] / "diag.json"
    code = main([
        "train", "--data", str(workspace["data"]), "--schema", str(workspace["schema"]),
        "--epsilon", "1.0", "--trees", "10", "--seed", "3",
        "--out", str(model_path), "--diagnostics", str(diag_path),
    ])
    assert code == 0
    model = load_model(str(model_path))
    assert model.tau == 10
    assert model.depth == 8
    diag = json.loads(diag_path.read_text(encoding="utf-8"))
    assert set(diag) == {
        "empty_leaf_fraction", "flip_fraction", "mean_smooth_sensitivity",
    }
    manifest = json.loads(
        (workspace["root"] / "model.json.manifest.json").read_text(encoding="utf-8")
    )
    assert manifest["command"] == "train"
    assert str(diag_path) in manifest["outputs"]


def test_train_is_deterministic_across_runs_and_threads(workspace, tmp_path):
    out = []
    for name, threads in (("m1.json", "1"), ("m2.json", "1"), ("m4.json", "4")):
        path = tmp_path / name
        code = main([
            "train", "--data", str(workspace["data"]),
            "--schema", str(workspace["schema"]),
            "--epsilon", "0.5", "--trees", "12", "--seed", "7",
            "--threads", threads, "--out", str(path),
        ])
        assert code == 0
        out.append(path.read_bytes())
    assert out[0] == out[1] == out[2]


def test_predict_appends_a_column(workspace, tmp_path):
    model_path = tmp_path / "model.json"
    main([
        "train", "--data", str(workspace["data"]), "--schema", str(workspace["schema"]),
        "--epsilon", "1.0", "--trees", "10", "--seed", "3", "--out", str(model_path),
    ])
    out_path = tmp_path / "scored.csv"
    code = main([
        "predict", "--model", str(model_path), "--data", str(workspace["data"]),
        "--out", str(out_path),
    ])
    assert code == 0
    with open(out_path, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    assert rows[0][-1] == "prediction"
    assert len(rows) == 601
    labels = {row[-1] for row in rows[1:]}
    assert labels <= {"c0", "c1"}


def test_eval_writes_report(workspace, tmp_path):
    report_path = tmp_path / "report.json"
    code = main([
        "eval", "--data", str(workspace["data"]), "--schema", str(workspace["schema"]),
        "--epsilon", "1.0", "--trees", "5", "--depth", "4", "--seed", "2",
        "--folds", "3", "--repeats", "1", "--report", str(report_path),
    ])
    assert code == 0
    report = json.loads(report_path.read_text(encoding="utf-8"))
    assert len(report["metrics"]["accuracy"]["samples"]) == 3
    assert report["config"]["epsilon"] == 1.0
    assert (tmp_path / "report.json.manifest.json").exists()


def test_audit_prints_report(capsys):
    code = main(["audit", "--counts", "A:3,B:2", "--epsilon", "1.0",
                 "--sensitivity", "smooth"])
    assert code == 0
    captured = capsys.readouterr()
    document = json.loads(captured.out)
    assert document["sensitivity_mode"] == "smooth"
    assert document["max_log_ratio"] > 1.0
    assert "max log ratio" in captured.err


def test_audit_report_file(tmp_path):
    report_path = tmp_path / "audit.json"
    code = main(["audit", "--counts", "A:3,B:2", "--epsilon", "0.5",
                 "--sensitivity", "global", "--report", str(report_path)])
    assert code == 0
    document = json.loads(report_path.read_text(encoding="utf-8"))
    assert document["max_log_ratio"] <= 0.5 + 1e-12
    assert (tmp_path / "audit.json.manifest.json").exists()


def test_usage_errors_exit_one(workspace, tmp_path, capsys):
    assert main(["train"]) == 1  # missing required flags
    assert main(["no-such-command"]) == 1
    assert main([
        "train", "--data", str(workspace["data"]), "--schema", str(workspace["schema"]),
        "--epsilon", "0", "--out", str(tmp_path / "m.json"),
    ]) == 1
    err = capsys.readouterr().err
    assert "epsilon" in err
    assert main(["audit", "--counts", "A:x", "--epsilon", "1.0"]) == 1
    assert main(["gen", "--out", "x.csv", "--schema-out", "y.json",
                 "--preset", "SynthA", "--informative", "3"]) == 1


def test_data_errors_exit_two(workspace, tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    schema = load_schema(str(workspace["schema"]))
    name = schema.features[0].name
    upper = schema.features[0].upper
    header = ",".join(list(schema.feature_names) + ["label"])
    cells = ["0.0"] * len(schema.feature_names) + ["c0"]
    cells[0] = str(upper * 2 + 10)
    bad.write_text(header + "\n" + ",".join(cells) + "\n", encoding="utf-8")
    code = main([
        "train", "--data", str(bad), "--schema", str(workspace["schema"]),
        "--epsilon", "1.0", "--out", str(tmp_path / "m.json"),
    ])
    assert code == 2
    assert name in capsys.readouterr().err


def test_data_errors_from_bad_model_file(tmp_path, capsys):
    model_path = tmp_path / "model.json"
    model_path.write_text('{"format_version": 99}', encoding="utf-8")
    code = main(["predict", "--model", str(model_path), "--data", "ignored.csv",
                 "--out", str(tmp_path / "o.csv")])
    assert code == 2
    assert "format version" in capsys.readouterr().err
