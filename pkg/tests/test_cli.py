import json

import pytest

from qtrojan.cli import main
from qtrojan.dataset import all_configs

TRIANGLE_TXT = "3 3\n0 1 1\n0 2 1\n1 2 1\n"


def run(*argv) -> int:
    return main([str(a) for a in argv])


def outputs(path):
    return {p.relative_to(path).as_posix(): p.read_bytes() for p in sorted(path.rglob("*")) if p.is_file()}


def test_usage_errors_exit_1(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        run("nonsense")
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        run("graphs", "--seed", "abc")
    assert exc.value.code == 1
    assert run("dataset", "--out", tmp_path) == 1  # --config missing


def test_pipeline_failure_exit_2(tmp_path, capsys):
    assert run("sweep", tmp_path / "missing.txt", "--out", tmp_path) == 2
    assert run("dataset", "--config", "ideal-back-x-1", "--out", tmp_path) == 2
    assert "failed" in capsys.readouterr().err


def test_graphs_command(tmp_path, capsys):
    assert run("graphs", "--out", tmp_path, "--no-timestamp") == 0
    index = (tmp_path / "index.csv").read_text().splitlines()
    assert len(index) == 814
    manifest = json.loads((tmp_path / "run_manifest.json").read_text())
    assert manifest["counts"] == {"3": 4, "4": 41, "5": 768}
    assert "timestamp" not in manifest


def test_timestamp_present_by_default(tmp_path, capsys):
    run("graphs", "--out", tmp_path)
    assert "timestamp" in json.loads((tmp_path / "run_manifest.json").read_text())


def test_sweep_reproducible(tmp_path, capsys):
    graph = tmp_path / "tri.txt"
    graph.write_text(TRIANGLE_TXT)
    for name in ("a", "b"):
        assert run("sweep", graph, "--budget", 60, "--out", tmp_path / name, "--no-timestamp") == 0
    assert outputs(tmp_path / "a") == outputs(tmp_path / "b")
    rows = (tmp_path / "a" / "sweep.csv").read_text().splitlines()
    assert len(rows) == 13
    assert "max_loss_spec" in json.loads((tmp_path / "a" / "run_manifest.json").read_text())


def test_dataset_train_eval_chain(tmp_path, capsys):
    cfg = "ideal-front-x-1"
    common = ("--budget", 40, "--no-timestamp")
    assert run("dataset", "--config", cfg, "--limit", 10, "--out", tmp_path / "data", *common) == 0
    ds = tmp_path / "data" / cfg
    assert (ds / "features.bin").exists() and (ds / "clean" / "n3_m0003.qasm").exists()
    for name in ("t1", "t2"):
        assert run("train", ds, "--epochs", 2, "--out", tmp_path / name, *common) == 0
    assert outputs(tmp_path / "t1") == outputs(tmp_path / "t2")
    assert run("eval", tmp_path / "t1" / "model.qtnet", ds, "--out", tmp_path / "ev", *common) == 0
    result = json.loads((tmp_path / "ev" / "eval.json").read_text())
    assert result["config"]["name"] == cfg
    assert set(result["metrics"]) >= {"accuracy", "precision", "recall", "f1"}
    row = (tmp_path / "ev" / "table_row.md").read_text().splitlines()[-1]
    assert row.startswith("| Qasm | Front | X | 1 |")


def fake_results(root, accuracy=1.0):
    for cfg in all_configs():
        d = root / cfg.name
        d.mkdir(parents=True)
        config = {"name": cfg.name, "backend": cfg.backend, "position": cfg.position,
                  "gate_type": cfg.gate_type, "count": cfg.count}
        metrics = {"accuracy": accuracy, "precision": 1.0, "recall": 1.0, "f1": 0.5}
        (d / "eval.json").write_text(json.dumps({"config": config, "metrics": metrics}))


def test_report_aggregates_twelve_rows(tmp_path, capsys):
    fake_results(tmp_path / "res", accuracy=0.9)
    assert run("report", tmp_path / "res", "--out", tmp_path / "rep", "--no-timestamp") == 0
    table = (tmp_path / "rep" / "results_table.md").read_text()
    assert table.count("| Qasm |") == 6 and table.count("| Linear5 |") == 6
    assert "Average accuracy: 90.00%" in table and "Average F1-score: 50.00%" in table
    assert "| Linear5 | Middle | Rx | 2 | 90.00% | 100.00% | 100.00% | 50.00% |" in table


def test_report_missing_row_fails(tmp_path, capsys):
    fake_results(tmp_path / "res")
    (tmp_path / "res" / "linear5-front-h-1" / "eval.json").unlink()
    assert run("report", tmp_path / "res") == 2
    assert "linear5-front-h-1" in capsys.readouterr().err
