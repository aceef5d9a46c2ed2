import csv
import os
import re
import warnings

import numpy as np
import pytest

from ftreerank import harness
from ftreerank.errors import (
    ConfigError,
    ConfigMismatch,
    DataError,
    FormatError,
    InvalidProtocol,
    IoError,
    ParseError,
)
from ftreerank.harness import ExperimentConfig
from ftreerank.metrics import empirical_auc
from ftreerank.plots import emit_plots
from ftreerank.treerank import LabeledCurveSet


def small(**kw):
    base = dict(case="a", K=10, length=256, j=8, N=6, n_train=200, n_test=200, B=3, seed=1)
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(learner="svm")
    with pytest.raises(ConfigError):
        ExperimentConfig(protocol="jackknife")
    with pytest.raises(ConfigError):
        ExperimentConfig(family="Meyer")
    with pytest.raises(ConfigError):
        ExperimentConfig(N="many")
    with pytest.raises(ConfigError):
        ExperimentConfig(case="c")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"depht": 3})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json("[1, 2]")
    with pytest.raises(ConfigError):
        ExperimentConfig(source="csv")
    assert ExperimentConfig(N="12").N == 12


def test_resolve_N():
    cfg = ExperimentConfig()
    assert cfg.resolve_N() == 20
    assert cfg.replace(N="0.5%").resolve_N() == 10
    assert cfg.replace(N="5%").resolve_N() == 102
    assert cfg.replace(N="100%").resolve_N() == 2048
    assert cfg.replace(N="1%").resolve_N(sensors=3) == 61
    with pytest.raises(ConfigError):
        cfg.replace(N="0.01%").resolve_N()
    with pytest.raises(ConfigError):
        cfg.replace(N=5000).resolve_N()


def test_config_json_and_paper_scale(tmp_path):
    cfg = small(prune=True)
    p = tmp_path / "cfg.json"
    p.write_text(cfg.to_json())
    assert ExperimentConfig.load(str(p)) == cfg
    ps = cfg.paper_scale()
    assert (ps.n_train, ps.resample_size, ps.n_test, ps.B) == (5000, 2000, 2000, 50)
    with pytest.raises(ConfigError):
        ExperimentConfig.load(str(tmp_path / "missing.json"))


def test_seeds_deterministic_and_distinct():
    a, b = small().seeds(), small().seeds()
    assert a[:3] == b[:3] and len(set(a[:3])) == 3
    assert small(seed=2).seeds()[:3] != a[:3]
    assert small(spec_seed=77).seeds()[0] == 77


def test_bootstrap_oracle_passthrough():
    cfg = small(B=1)
    rep = harness.run_bootstrap(cfg, harness.oracle_learner)
    _, test, _ = harness.load_data(cfg)
    assert rep.mean_auc == empirical_auc(test.oracle_scores, test.labels) == rep.test_oracle_auc


def test_bootstrap_deterministic_and_consistent():
    cfg = small()
    a, b = harness.run_bootstrap(cfg), harness.run_bootstrap(cfg)
    assert a.to_json() == b.to_json()
    assert len(a.runs) == 3 and not a.failures
    assert a.mean_auc == pytest.approx(np.mean(a.aucs), abs=1e-12)
    assert a.std_auc == pytest.approx(np.std(a.aucs, ddof=1), abs=1e-12)
    assert abs(a.optimal_auc - 0.94) <= 0.005
    assert len({r["index_hash"] for r in a.runs}) == 3
    assert "runtime" not in a.to_dict()


def test_bootstrap_indices_with_replacement():
    idx = harness.bootstrap_indices(small(resample_size=50), 200)
    assert len(idx) == 3
    for rows, _ in idx:
        assert rows.size == 50 and rows.min() >= 0 and rows.max() < 200
        assert np.all(np.diff(rows) >= 0)


def test_learner_failures_recorded():
    calls = []

    def flaky(config, data, seed):
        calls.append(seed)
        if len(calls) == 2:
            raise DataError("boom")
        return harness.OracleScorer()

    rep = harness.run_bootstrap(small(), flaky)
    assert len(rep.runs) == 2 and rep.failures[0]["run"] == 1

    def bad_config(config, data, seed):
        raise ConfigError("bad")

    with pytest.raises(ConfigError):
        harness.run_bootstrap(small(), bad_config)


def test_vfold_oracle_matches_whole_set():
    cfg = small(protocol="v_fold", n_train=2000, V=4)
    rep = harness.run_vfold(cfg, harness.oracle_learner)
    pool, _, _ = harness.load_data(cfg)
    assert abs(rep.mean_auc - empirical_auc(pool.oracle_scores, pool.labels)) <= 0.03
    assert len(rep.runs) == 4


def test_vfold_guards():
    with pytest.raises(InvalidProtocol):
        harness.run_vfold(small(protocol="v_fold", n_train=20, V=20), harness.oracle_learner)
    with pytest.raises(InvalidProtocol):
        harness.run_vfold(small(), harness.oracle_learner)


def test_vfold_stratified_balance():
    cfg = small(protocol="v_fold", V=4)
    pool, _, _ = harness.load_data(cfg)
    folds = harness.vfold_indices(cfg, pool.labels)
    pos = [int(np.sum(pool.labels[te] == 1)) for _, te, _ in folds]
    neg = [int(np.sum(pool.labels[te] == -1)) for _, te, _ in folds]
    assert max(pos) - min(pos) <= 1 and max(neg) - min(neg) <= 1
    assert sorted(np.concatenate([te for _, te, _ in folds]).tolist()) == list(range(len(pool)))


def test_duplicated_halves_give_equal_fold_aucs():
    cfg = small()
    half, _, _ = harness.load_data(cfg)
    both = LabeledCurveSet(np.vstack([half.curves, half.curves]), np.r_[half.labels, half.labels])
    n = len(half)
    first, second = np.arange(n), np.arange(n, 2 * n)
    a, _ = harness._run_one(harness.fit_learner, cfg, both, both.subset(second), first, 0, 0)
    b, _ = harness._run_one(harness.fit_learner, cfg, both, both.subset(first), second, 0, 1)
    assert a["auc"] == b["auc"]


def test_holdout():
    rep = harness.evaluate(small(protocol="holdout", holdout=0.25))
    assert len(rep.runs) == 1 and rep.runs[0]["n_train"] == 150


def test_compare_full_dimension_zero_delta():
    rep = harness.compare_local_vs_global(small(N="100%"))
    assert all(d["delta"] == 0.0 for d in rep.deltas) and rep.mean_delta == 0.0
    assert [r["index_hash"] for r in rep.first.runs] == [r["index_hash"] for r in rep.second.runs]


def test_compare_mismatch():
    with pytest.raises(ConfigMismatch):
        harness.compare_local_vs_global(small(), small(protocol="v_fold", learner="filtered_treerank"))


def test_compare_explicit_pair():
    a = small(learner="functional_treerank")
    rep = harness.compare_local_vs_global(a, a.replace(learner="filtered_treerank"))
    assert len(rep.deltas) == 3
    assert rep.mean_delta == pytest.approx(rep.first.mean_auc - rep.second.mean_auc, abs=1e-12)


# ingestion ---------------------------------------------------------------

def test_csv_roundtrip_bytes(tmp_path):
    rng = np.random.default_rng(0)
    data = LabeledCurveSet(rng.normal(size=(4, 8)), [1, -1, 1, -1])
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    harness.write_csv(data, str(p1))
    back = harness.ingest_csv(str(p1))
    harness.write_csv(back, str(p2))
    assert p1.read_bytes() == p2.read_bytes()
    np.testing.assert_array_equal(back.curves, data.curves)


def test_csv_padding_and_sensors(tmp_path):
    rng = np.random.default_rng(1)
    rows = np.hstack([np.array([[1], [0], [1]]), rng.normal(size=(3, 2 * 121))])
    p = tmp_path / "s.csv"
    np.savetxt(p, rows, delimiter=",", header="label," + ",".join(f"t{i}" for i in range(242)), comments="")
    data = harness.ingest_csv(str(p), {"sensors": 2})
    assert data.curves.shape == (3, 2, 128)
    assert data.meta["pad"] == 7 and data.meta["sensor_length"] == 121
    np.testing.assert_array_equal(data.curves[:, :, 121:], 0.0)
    np.testing.assert_array_equal(data.labels, [1, -1, 1])


def test_csv_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,0.5,0.25\n-1,0.5\n")
    with pytest.raises(FormatError):
        harness.ingest_csv(str(p))
    p.write_text("1,0.5,abc\n-1,0.5,0.1\n")
    with pytest.raises(ParseError):
        harness.ingest_csv(str(p))
    p.write_text("")
    with pytest.raises(FormatError):
        harness.ingest_csv(str(p))
    p.write_text("1,0.5,0.1,0.2\n-1,0.5,0.1,0.3\n")
    with pytest.raises(FormatError):
        harness.ingest_csv(str(p), {"sensors": 2})
    with pytest.raises(DataError):
        harness.ingest_csv(str(tmp_path / "missing.csv"))
    p.write_text("1,0.5,0.1\n1,0.5,0.3\n")
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        harness.ingest_csv(str(p))
    assert any("single class" in str(x.message) for x in w)


def test_export_import_preserves_oracle_auc(tmp_path):
    cfg = small()
    train, _, spec = harness.load_data(cfg)
    prefix = str(tmp_path / "train")
    harness.export_dataset(train, spec, prefix, {"sample": 3})
    back = harness.import_dataset(prefix)
    assert empirical_auc(back.oracle_scores, back.labels) == empirical_auc(train.oracle_scores, train.labels)
    np.testing.assert_array_equal(back.components, train.components)
    np.testing.assert_array_equal(back.curves, train.curves)


def test_csv_source_centers(tmp_path):
    cfg = small()
    train, test, _ = harness.load_data(cfg)
    harness.write_csv(train, str(tmp_path / "tr.csv"))
    harness.write_csv(test, str(tmp_path / "te.csv"))
    csv_cfg = small(source="csv", train_path=str(tmp_path / "tr.csv"), test_path=str(tmp_path / "te.csv"))
    tr, te, spec = harness.load_data(csv_cfg)
    assert spec is None
    np.testing.assert_allclose(tr.curves.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(te.curves, test.curves - train.curves.mean(axis=0), atol=1e-12)
    rep = harness.evaluate(csv_cfg)
    assert rep.optimal_auc is None and rep.test_oracle_auc is None
    raw = harness.load_data(csv_cfg.replace(center=False))[0]
    np.testing.assert_array_equal(raw.curves, train.curves)


# plots -------------------------------------------------------------------

def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_single_run_plot(tmp_path):
    rep = harness.evaluate(small(protocol="holdout"))
    paths = emit_plots(rep, str(tmp_path))
    svg = open(paths["svg"]).read()
    polylines = re.findall(r'<polyline class="roc" data-label="([^"]*)"', svg)
    assert polylines == ["functional_treerank", "optimal"]
    assert 'class="envelope"' not in svg  # one run has no band


def test_plot_csv_consistency(tmp_path):
    rep = harness.compare_local_vs_global(small())
    paths = emit_plots(rep, str(tmp_path))
    for row in read_rows(paths["envelope"]):
        assert float(row["width"]) >= 0.0
        assert float(row["lower"]) <= float(row["mean"]) <= float(row["upper"])
    curves = {}
    for row in read_rows(paths["series"]):
        if row["series"] == "run":
            curves.setdefault((row["learner"], int(row["run"])), []).append((float(row["fpr"]), float(row["tpr"])))
    expected = {("functional", r["run"]): r["auc"] for r in rep.first.runs}
    expected.update({("filtered", r["run"]): r["auc"] for r in rep.second.runs})
    assert set(curves) == set(expected)
    for key, pts in curves.items():
        f, t = np.array(pts).T
        assert np.sum(np.diff(f) * (t[1:] + t[:-1]) / 2) == pytest.approx(expected[key], abs=1e-9)
    svg = open(paths["svg"]).read()
    assert svg.count('class="envelope"') == 2
    assert svg.startswith("<svg") and svg.endswith("</svg>\n")


def test_plot_unwritable(tmp_path):
    rep = harness.evaluate(small(protocol="holdout"))
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(IoError):
        emit_plots(rep, str(blocker / "sub"))


def test_plots_deterministic(tmp_path):
    rep = harness.run_bootstrap(small())
    a = emit_plots(rep, str(tmp_path / "a"))
    b = emit_plots(harness.run_bootstrap(small()), str(tmp_path / "b"))
    for key in a:
        assert open(a[key], "rb").read() == open(b[key], "rb").read()
    assert os.path.basename(a["svg"]) == "roc.svg"


# desk-scale behaviour on the default Case-a mixture (length 2048) ----------

@pytest.mark.xfail(strict=True, reason="floor 0.75 not reached at n=600: measured mean 0.61-0.65 "
                                       "over seeds 0-4 (0.73-0.79 at n=2000)")
def test_functional_five_percent_desk_floor():
    rep = harness.run_bootstrap(ExperimentConfig(case="a", N="5%", n_train=600, n_test=600, B=10, seed=0))
    assert rep.mean_auc >= 0.75


def test_local_beats_global_half_percent():
    # Case-a desk configuration shared with the 1% comparison: n=2000, rate 8
    cfg = ExperimentConfig(case="a", rate=8.0, N="0.5%", n_train=2000, n_test=2000, B=10, seed=0)
    rep = harness.compare_local_vs_global(cfg)
    assert rep.mean_delta >= 0.05
