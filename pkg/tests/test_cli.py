import json
import subprocess
import sys

import numpy as np
import pytest

from ftreerank import cli
from ftreerank.treerank import RankingTree

SMALL = ["--set", "K=10", "--set", "length=256", "--set", "j=8", "--set", "N=6",
         "--set", "n_train=150", "--set", "n_test=150", "--set", "B=2"]


def run(*args):
    return cli.main(list(args))


def test_generate_train_score(tmp_path):
    data = tmp_path / "data"
    assert run("generate", *SMALL, "--seed", "3", "--out", str(data)) == 0
    for name in ("spec.json", "train.csv", "train.json", "test.csv", "test.json"):
        assert (data / name).exists()
    tree_path = tmp_path / "tree.json"
    assert run("train", *SMALL, "--data", str(data / "train.csv"), "--out", str(tree_path)) == 0
    tree = RankingTree.from_json(tree_path.read_text())
    assert tree.kind == "functional" and tree.params["n_coefs"] == 6
    scores = tmp_path / "scores.csv"
    assert run("score", "--tree", str(tree_path), "--data", str(data / "test.csv"), "--out", str(scores)) == 0
    lines = scores.read_text().splitlines()
    assert lines[0] == "index,label,score" and len(lines) == 151


def test_evaluate_and_compare(tmp_path, capsys):
    assert run("evaluate", *SMALL, "--out", str(tmp_path / "ev")) == 0
    rep = json.loads((tmp_path / "ev" / "report.json").read_text())
    assert len(rep["runs"]) == 2
    assert (tmp_path / "ev" / "roc.svg").exists()
    assert "mean test AUC" in capsys.readouterr().out
    assert run("compare", *SMALL, "--out", str(tmp_path / "cmp")) == 0
    cmp_ = json.loads((tmp_path / "cmp" / "comparison.json").read_text())
    assert cmp_["mean_delta"] == pytest.approx(np.mean([d["delta"] for d in cmp_["deltas"]]))


def test_select_dim(tmp_path):
    out = tmp_path / "sel.csv"
    assert run("select-dim", *SMALL, "--candidates", "3,6,12", "--c-v", "0.1", "--out", str(out)) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "N,auc,pen,cpauc,selected" and len(rows) == 4
    assert sum(int(r.split(",")[-1]) for r in rows[1:]) == 1


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"K": 10, "length": 256, "j": 8, "N": 6, "n_train": 120, "n_test": 120,
                               "protocol": "holdout"}))
    assert run("evaluate", "--config", str(cfg), "--set", "depth=2", "--out", str(tmp_path / "o")) == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["config"]["depth"] == 2 and rep["protocol"] == "holdout"


def test_exit_codes(tmp_path):
    assert run("evaluate", "--set", "learner=svm", "--out", str(tmp_path / "x")) == 2
    assert run("evaluate", "--set", "nonsense", "--out", str(tmp_path / "x")) == 2
    assert run("evaluate", "--config", str(tmp_path / "none.json")) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("1,0.5,0.1\n-1,0.5\n")
    assert run("train", "--data", str(bad), "--out", str(tmp_path / "t.json")) == 3
    assert run("score", "--tree", str(tmp_path / "missing.json"), "--data", str(bad)) == 3
    # N larger than the curve: a configuration problem detected at run time
    assert run("train", *SMALL, "--set", "N=100000", "--out", str(tmp_path / "t.json")) == 2


def test_data_and_runtime_error_exits(tmp_path, capsys):
    tree = tmp_path / "t.json"
    assert run("train", *SMALL, "--out", str(tree)) == 0
    other = tmp_path / "other.csv"
    other.write_text("1,0,1,2,3\n-1,3,2,1,0\n")
    assert run("score", "--tree", str(tree), "--data", str(other), "--out", str(tmp_path / "s.csv")) == 3
    # single-curve resamples: every run fails, which is not a config or data problem
    assert run("evaluate", *SMALL, "--set", "resample_size=1", "--out", str(tmp_path / "e")) == 4
    assert "every run failed" in capsys.readouterr().err


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ftreerank.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for name in ("generate", "train", "score", "evaluate", "compare", "select-dim"):
        assert name in proc.stdout
