import csv
import json

import numpy as np
import pytest
import yaml

from lorafp import cli, harness, ingest, knn, metrics, represent, synthetic
from lorafp.errors import ConfigError
from lorafp.eval import error_stats


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_select_best_prefers_smaller_on_ties():
    assert harness.select_best([3, 1, 2], [5.0, 5.0, 7.0]) == 1
    assert harness.select_best([10, 20], [2.0, 1.0]) == 20


def test_features_shapes(small_splits):
    rep = represent.fit("powed", small_splits.train)
    assert harness.features("knn", rep, small_splits.val).shape == (len(small_splits.val), 68)
    x = harness.features("mlp", rep, small_splits.val)
    assert x.shape == (len(small_splits.val), 69)
    np.testing.assert_array_equal(x[:, -1], small_splits.val.sf)


def test_single_point_sweep(small_splits):
    res = harness.sweep_alpha(small_splits, grid=[24], k=5)
    assert res.values == [24.0] and res.best == 24.0
    assert res.test is not None and res.test.count == len(small_splits.test)


def test_sweep_matches_direct_runs(small_splits):
    res = harness.sweep_beta(small_splits, grid=[1.3, 0.9], k=7)
    assert res.values == [0.9, 1.3]
    for beta, mean in zip(res.values, res.val_mean):
        rep = represent.fit("powed", small_splits.train, beta=beta)
        model = knn.fit(harness.features("knn", rep, small_splits.train),
                        small_splits.train.coords, "braycurtis", 7)
        pred = model.predict(harness.features("knn", rep, small_splits.val))
        assert error_stats(pred, small_splits.val.coords).mean == mean
    assert res.best_val_mean == min(res.val_mean)


def test_sweep_rejects_empty_grid(small_splits):
    with pytest.raises(ConfigError):
        harness.sweep_alpha(small_splits, grid=[])


def test_metric_k_sweep_equals_per_k_runs(small_splits):
    table = harness.sweep_metric_k(small_splits, ("canberra",), ("positive",), k_max=6)
    cell = table[("canberra", "positive")]
    rep = represent.fit("positive", small_splits.train)
    xtr = harness.features("knn", rep, small_splits.train)
    xva = harness.features("knn", rep, small_splits.val)
    means = []
    for k in range(1, 7):
        pred = knn.fit(xtr, small_splits.train.coords, "canberra", k).predict(xva)
        means.append(error_stats(pred, small_splits.val.coords).mean)
    assert [s.mean for s in cell.curve] == means
    assert cell.k == harness.select_best(list(range(1, 7)), means)
    assert cell.mean == min(means)


def test_metric_k_sweep_parallel_matches_serial(small_splits):
    a = harness.sweep_metric_k(small_splits, ("euclidean", "hamming"), ("positive", "powed"), 4)
    b = harness.sweep_metric_k(small_splits, ("euclidean", "hamming"), ("positive", "powed"), 4,
                               n_jobs=2)
    assert {key: (c.k, c.mean) for key, c in a.items()} == \
           {key: (c.k, c.mean) for key, c in b.items()}


def test_boolean_family_is_representation_invariant(small_splits):
    # binarization only sees which gateways heard the message
    a = harness.run_boolean_family(small_splits, "powed", k_max=5)
    b = harness.run_boolean_family(small_splits, "positive", k_max=5)
    assert set(a) == set(metrics.BOOLEAN_KINDS)
    for m in a:
        assert (a[m].k, a[m].mean) == (b[m].k, b[m].mean)


def test_metric_k_sweep_rejects_unknown_metric(small_splits):
    with pytest.raises(ValueError):
        harness.sweep_metric_k(small_splits, ("cosine",), ("positive",), 3)


@pytest.mark.parametrize("method,params", [
    ("knn", {"k": 5}),
    ("etrees", {"n_estimators": 5, "seed": 1}),
    ("mlp", {"layer_widths": [16, 2], "max_epochs": 5, "batch_size": 64}),
])
def test_run_experiment_writes_outputs(small_splits, tmp_path, method, params):
    res = harness.run_experiment(small_splits, method, {"kind": "powed", "beta": 1.1}, params,
                                 output_dir=tmp_path)
    assert set(res.stats) == set(harness.SPLITS)
    for s in harness.SPLITS:
        rows = _read(tmp_path / f"predictions_{s}.csv")
        assert rows[0] == ["pred_lat", "pred_lon", "true_lat", "true_lon", "error_m"]
        assert len(rows) == len(small_splits[s]) + 1
    doc = json.loads((tmp_path / f"result_{method}.json").read_text())
    assert doc["stats"]["test"]["mean"] == res.stats["test"].mean
    assert (tmp_path / "fig5_loss.csv").exists() == (method == "mlp")
    [loaded] = harness.load_results(tmp_path)
    assert loaded.stats["val"] == res.stats["val"]


def test_run_experiment_rejects_bad_params(small_splits):
    with pytest.raises(ConfigError):
        harness.run_experiment(small_splits, "etrees", params={"n_trees": 3})
    with pytest.raises(ConfigError):
        harness.run_experiment(small_splits, "mlp", params={"widths": [3]})


def test_runs_are_reproducible(small_splits, tmp_path):
    for d in ("a", "b"):
        harness.run_experiment(small_splits, "etrees", params={"n_estimators": 3},
                               output_dir=tmp_path / d)
    for name in ("predictions_test.csv", "result_etrees.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_emit_report_formats(tmp_path, small_splits):
    table = harness.sweep_metric_k(small_splits, harness.TABLE2_METRICS, represent.KINDS, 3)
    hist = {1: 4, 3: 10, 2: 7}
    written = harness.emit_report(tmp_path, table1=hist, table2=table,
                                  rssi_hist=[(-120.0, 3), (-119.0, 0)])
    assert [p.name for p in written] == ["table1.csv", "fig2_hist.csv", "table2.csv"]
    assert _read(tmp_path / "table1.csv") == [["gateways", "messages"], ["1", "4"],
                                              ["2", "7"], ["3", "10"]]
    t2 = _read(tmp_path / "table2.csv")
    assert len(t2) == 7 and all(len(r) == 1 + 4 * 3 for r in t2)
    assert [r[0] for r in t2[1:]] == list(harness.TABLE2_METRICS)
    assert _read(tmp_path / "fig2_hist.csv")[1] == ["-120.000000", "3"]


def test_emit_report_empty_inputs(tmp_path):
    harness.emit_report(tmp_path, table2={}, table3=[], alpha=None)
    assert len(_read(tmp_path / "table2.csv")) == 1
    assert _read(tmp_path / "table3.csv") == [["method", "train_mean", "train_median",
                                               "val_mean", "val_median", "test_mean",
                                               "test_median"]]
    harness.write_sweep(None, tmp_path / "fig3_alpha.csv")
    assert _read(tmp_path / "fig3_alpha.csv") == [["value", "val_mean", "val_median"]]


def test_experiment_spec_from_yaml(tmp_path):
    cfg = {
        "dataset": {"path": "data.csv", "mapping": {"rssi_pattern": "BS {i}",
                                                    "rssi_range": [1, 68]}},
        "split": {"seed": 9},
        "representation": {"kind": "exponential", "alpha": 60},
        "method": "etrees",
        "etrees": {"n_estimators": 10},
        "jobs": 2,
    }
    path = tmp_path / "exp.yaml"
    path.write_text(yaml.safe_dump(cfg))
    spec = harness.ExperimentSpec.from_file(path)
    assert spec.dataset_path == str(tmp_path / "data.csv")
    assert spec.split_seed == 9 and spec.jobs == 2
    assert spec.params == {"n_estimators": 10}
    assert spec.representation == {"kind": "exponential", "alpha": 60}
    with pytest.raises(ConfigError):
        harness.ExperimentSpec(method="svm")
    with pytest.raises(ConfigError):
        harness.ExperimentSpec(representation={"kind": "log"})


# --- command line -----------------------------------------------------------

@pytest.fixture(scope="module")
def csv_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "data.csv"
    ingest.save_dataset(synthetic.make_dataset(600, seed=3), path)
    return path


def test_cli_ingest_check(csv_path, tmp_path, capsys):
    assert cli.main(["ingest-check", "--data", str(csv_path), "--out", str(tmp_path)]) == 0
    assert "600 records" in capsys.readouterr().out
    rows = _read(tmp_path / "table1.csv")
    assert sum(int(r[1]) for r in rows[1:]) == 600
    assert (tmp_path / "fig2_hist.csv").exists()


def test_cli_split_and_run(csv_path, tmp_path, capsys):
    assert cli.main(["split", "--data", str(csv_path), "--seed", "4", "--out", str(tmp_path)]) == 0
    m = ingest.load_split(tmp_path / "split.json", n_records=600)
    assert m.sizes == (420, 90, 90)
    cfg = tmp_path / "exp.yaml"
    cfg.write_text(yaml.safe_dump({
        "dataset": {"path": str(csv_path)},
        "split": {"manifest": str(tmp_path / "split.json")},
        "method": "knn", "knn": {"k": 3}, "output": "runs",
    }))
    assert cli.main(["run", "--config", str(cfg)]) == 0
    assert (tmp_path / "runs" / "result_knn.json").exists()
    assert cli.main(["report", "--config", str(cfg)]) == 0
    assert _read(tmp_path / "runs" / "table3.csv")[1][0] == "knn"


def test_cli_sweeps(csv_path, tmp_path):
    cfg = tmp_path / "exp.yaml"
    cfg.write_text(yaml.safe_dump({
        "dataset": {"path": str(csv_path)},
        "sweep": {"alpha_grid": [30, 60], "beta_grid": [1.0], "k": 3, "k_max": 3,
                  "metrics": ["braycurtis"], "representations": ["powed"]},
    }))
    out = str(tmp_path / "o")
    for cmd in ("sweep-alpha", "sweep-beta", "sweep-table2"):
        assert cli.main([cmd, "--config", str(cfg), "--out", out]) == 0
    assert len(_read(tmp_path / "o" / "fig3_alpha.csv")) == 3
    assert len(_read(tmp_path / "o" / "fig4_beta.csv")) == 2
    assert len(_read(tmp_path / "o" / "boolean_family.csv")) == 5


def test_cli_reports_input_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("nope,columns\n1,2\n")
    assert cli.main(["ingest-check", "--data", str(bad), "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err
    assert cli.main(["run", "--out", str(tmp_path)]) == 2
