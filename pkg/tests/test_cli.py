import csv
import json

import pytest

from kubeyoyo.cli import main

YOYO_SHORT = """\
schema_version: 1
name: short
cluster:
  initial_pods_Np: 12
  max_nodes: 100
schedule:
  kind: yoyo
  base_rate_r: 120
  power_k: 20
  t_on: 5m
  t_off: 10m
  cycles_n: 1
"""
FLAT_SHORT = YOYO_SHORT.replace("name: short", "name: flat").replace("kind: yoyo", "kind: flat_ddos")


@pytest.fixture
def scenario(tmp_path):
    path = tmp_path / "short.yaml"
    path.write_text(YOYO_SHORT)
    return path


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_simulate_writes_all_outputs(tmp_path, scenario, capsys):
    assert main(["simulate", "--scenario", str(scenario), "--out", str(tmp_path / "o")]) == 0
    out = tmp_path / "o" / "short"
    assert set(_files(out)) == {"trace.csv", "trace.jsonl", "actions.jsonl", "plot.csv",
                                "report.json"}
    rows = list(csv.DictReader(open(out / "trace.csv")))
    assert len(rows) == 900
    plot = list(csv.reader(open(out / "plot.csv")))
    assert plot[0] == ["t", "rate", "pods", "nodes", "cpu", "response_time"]
    report = json.loads((out / "report.json").read_text())
    assert report["damage"]["cost"] == pytest.approx(20 / 3)
    assert "RD_e" in capsys.readouterr().out


def test_simulate_is_byte_identical_on_rerun(tmp_path, scenario):
    for d in ("a", "b"):
        assert main(["simulate", "--scenario", str(scenario), "--out", str(tmp_path / d)]) == 0
    assert _files(tmp_path / "a" / "short") == _files(tmp_path / "b" / "short")


def test_global_flags_before_subcommand(tmp_path, scenario):
    assert main(["--out", str(tmp_path / "g"), "--seed", "9", "simulate",
                 "--scenario", str(scenario)]) == 0
    report = json.loads((tmp_path / "g" / "short" / "report.json").read_text())
    assert report["scenario"]["seed"] == 9


def test_attack_shorthand_cost(tmp_path):
    assert main(["simulate", "--attack", "k=20 on=10m off=20m n=6", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "attack" / "report.json").read_text())
    assert report["damage"]["cost"] == pytest.approx(20 / 3)
    assert len((tmp_path / "attack" / "trace.csv").read_text().splitlines()) == 6 * 1800 + 1


def test_invalid_config_exits_nonzero_with_line(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("schema_version: 1\ncluster:\n  w_p_up: 0\n")
    assert main(["simulate", "--scenario", str(bad), "--out", str(tmp_path)]) != 0
    assert f"{bad}:3:" in capsys.readouterr().err
    assert not (tmp_path / "bad").exists()


def test_compare_table(tmp_path, scenario):
    flat = tmp_path / "flat.yaml"
    flat.write_text(FLAT_SHORT)
    assert main(["compare", str(flat), str(scenario), "--out", str(tmp_path / "c")]) == 0
    rows = list(csv.reader(open(tmp_path / "c" / "comparison.csv")))
    assert rows[0] == ["metric", "flat", "short"]
    assert [r[0] for r in rows[1:]] == ["Cost", "RD_e", "RD_p", "Potency"]
    assert float(rows[1][1]) == 20 and float(rows[1][2]) == pytest.approx(20 / 3, abs=1e-6)


def test_compare_against_itself_gives_identical_columns(tmp_path, scenario):
    assert main(["compare", str(scenario), str(scenario), "--out", str(tmp_path)]) == 0
    rows = list(csv.reader(open(tmp_path / "comparison.csv")))
    assert rows[0] == ["metric", "short", "short_2"]
    assert all(r[1] == r[2] for r in rows[1:])


def test_compare_rejects_mismatched_clusters(tmp_path, scenario, capsys):
    other = tmp_path / "other.yaml"
    other.write_text(YOYO_SHORT.replace("max_nodes: 100", "max_nodes: 90"))
    assert main(["compare", str(scenario), str(other), "--out", str(tmp_path)]) == 2
    assert "different cluster" in capsys.readouterr().err


def test_optimal(capsys):
    assert main(["optimal"]) == 0
    assert json.loads(capsys.readouterr().out) == {"t_on": 220, "t_off": 1025}


def test_missing_dataset_is_an_error(tmp_path, capsys):
    assert main(["train", "--data", str(tmp_path / "none.csv"), "--out", str(tmp_path)]) == 2
    assert "dataset not found" in capsys.readouterr().err
    assert main(["eval", "--out", str(tmp_path)]) == 2


def test_dataset_train_eval_pipeline(tmp_path):
    out = str(tmp_path / "d")
    assert main(["dataset", "--runs-per-cell", "1", "--out", out]) == 0
    rows = list(csv.reader(open(tmp_path / "d" / "dataset.csv")))
    assert len(rows) - 1 == 51
    assert main(["train", "--out", out, "--min-samples-split", "10", "--min-samples-leaf", "3"]) == 0
    assert main(["eval", "--out", out]) == 0
    metrics = json.loads((tmp_path / "d" / "metrics.json").read_text())
    for key in ("accuracy", "precision", "recall", "f1", "tp", "tn", "fp", "fn"):
        assert key in metrics["metrics"]
    assert len(metrics["feature_importance"]) == 20

    # swapping every label complements accuracy
    test_csv = tmp_path / "d" / "test.csv"
    lines = test_csv.read_text().splitlines()
    swapped = [lines[0]] + [l[:-1] + str(1 - int(l[-1])) for l in lines[1:]]
    swapped_csv = tmp_path / "swapped.csv"
    swapped_csv.write_text("\n".join(swapped) + "\n")
    assert main(["eval", "--out", str(tmp_path / "s"), "--model", str(tmp_path / "d" / "model.json"),
                 "--data", str(swapped_csv)]) == 0
    flipped = json.loads((tmp_path / "s" / "metrics.json").read_text())
    assert metrics["metrics"]["accuracy"] + flipped["metrics"]["accuracy"] == pytest.approx(1)

    # rerunning with the same seed reproduces every artifact byte for byte
    again = str(tmp_path / "d2")
    assert main(["dataset", "--runs-per-cell", "1", "--out", again]) == 0
    assert main(["train", "--out", again, "--min-samples-split", "10", "--min-samples-leaf", "3"]) == 0
    assert main(["eval", "--out", again]) == 0
    assert _files(tmp_path / "d") == _files(tmp_path / "d2")
