"""Experiment orchestration: parameter sweeps, method runs and report files.

Model selection always uses the validation split; the test split is only
scored for the configuration a sweep picked. kNN sees the 68 transformed
RSSI values; extra trees and the MLP also get the spreading factor.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from joblib import Parallel, delayed

from lorafp import etrees, ingest, knn, metrics, neural, represent
from lorafp.errors import ConfigError
from lorafp.eval import ErrorStats, error_stats, haversine, summarize

log = logging.getLogger(__name__)

METHODS = ("knn", "etrees", "mlp")
SPLITS = ("train", "val", "test")
ALPHA_GRID = tuple(range(5, 95, 5))
BETA_GRID = tuple(round(0.7 + 0.1 * i, 1) for i in range(11))
TABLE2_METRICS = ("euclidean", "manhattan", "chebyshev", "hamming", "canberra", "braycurtis")
BEST_ALPHA = 60.0
BEST_BETA = 1.1


# --- specification ----------------------------------------------------------

@dataclass
class ExperimentSpec:
    dataset_path: str | None = None
    mapping: ingest.ColumnMapping | None = None
    split_seed: int = 0
    fractions: tuple = ingest.DEFAULT_FRACTIONS
    manifest_path: str | None = None
    representation: dict = field(default_factory=lambda: {"kind": "powed", "beta": BEST_BETA})
    method: str = "knn"
    params: dict = field(default_factory=dict)
    output_dir: str = "out"
    sweep: dict = field(default_factory=dict)
    jobs: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        rep = dict(self.representation)
        if rep.get("kind") not in represent.KINDS:
            raise ConfigError(f"representation kind must be one of {represent.KINDS}")
        self.representation = rep

    @classmethod
    def from_dict(cls, doc: dict, base_dir=".") -> "ExperimentSpec":
        base = Path(base_dir)

        def resolve(p):
            return None if p is None else str(base / p)

        data = doc.get("dataset", {})
        mapping = None
        if "mapping" in data:
            mapping = ingest.ColumnMapping.with_overrides(data["mapping"])
        elif "mapping_file" in data:
            mapping = ingest.ColumnMapping.from_file(resolve(data["mapping_file"]))
        split = doc.get("split", {})
        method = doc.get("method", "knn")
        return cls(
            dataset_path=resolve(data.get("path")),
            mapping=mapping,
            split_seed=int(split.get("seed", 0)),
            fractions=tuple(split.get("fractions", ingest.DEFAULT_FRACTIONS)),
            manifest_path=resolve(split.get("manifest")),
            representation=doc.get("representation", {"kind": "powed", "beta": BEST_BETA}),
            method=method,
            params=dict(doc.get(method) or {}),
            output_dir=str(base / doc.get("output", "out")),
            sweep=dict(doc.get("sweep") or {}),
            jobs=int(doc.get("jobs", 1)),
        )

    @classmethod
    def from_file(cls, path) -> "ExperimentSpec":
        path = Path(path)
        with open(path) as fh:
            doc = yaml.safe_load(fh) or {}
        return cls.from_dict(doc, base_dir=path.parent)


@dataclass(frozen=True)
class Splits:
    train: ingest.Dataset
    val: ingest.Dataset
    test: ingest.Dataset

    @classmethod
    def from_manifest(cls, d: ingest.Dataset, m: ingest.SplitManifest) -> "Splits":
        m.validate(len(d))
        return cls(d.subset(m.train_indices), d.subset(m.val_indices), d.subset(m.test_indices))

    @classmethod
    def from_spec(cls, spec: ExperimentSpec) -> "Splits":
        if spec.dataset_path is None:
            raise ConfigError("experiment has no dataset path")
        d = ingest.load_dataset(spec.dataset_path, spec.mapping)
        if spec.manifest_path:
            m = ingest.load_split(spec.manifest_path, n_records=len(d))
        else:
            m = ingest.split_dataset(d, spec.split_seed, spec.fractions)
        return cls.from_manifest(d, m)

    def __getitem__(self, name) -> ingest.Dataset:
        return getattr(self, name)


def _splits(data) -> Splits:
    return Splits.from_spec(data) if isinstance(data, ExperimentSpec) else data


def fit_representation(train: ingest.Dataset, kind: str, alpha=None, beta=None, tau=None):
    return represent.fit(kind, train, alpha=alpha, beta=beta, tau=tau)


def features(method: str, rep: represent.RepresentationConfig, d: ingest.Dataset) -> np.ndarray:
    x = represent.transform(rep, d.rssi)
    if method == "knn":
        return x
    return np.column_stack([x, d.sf.astype(float)])


# --- sweeps ----------------------------------------------------------------

@dataclass
class SweepResult:
    axis: str
    values: list
    val_mean: list
    val_median: list
    best: float
    test: ErrorStats | None = None

    @property
    def best_val_mean(self) -> float:
        return self.val_mean[self.values.index(self.best)]

    def rows(self):
        return [{self.axis: v, "val_mean": m, "val_median": md}
                for v, m, md in zip(self.values, self.val_mean, self.val_median)]


def select_best(values, scores):
    """Value with the lowest score; ties go to the smaller value."""
    return min(zip(scores, values))[1]


def _knn_cell(splits, kind, alpha, beta, metric, k, score_test=False):
    rep = represent.fit(kind, splits.train, alpha=alpha, beta=beta)
    model = knn.fit(features("knn", rep, splits.train), splits.train.coords, metric, k)
    val = error_stats(model.predict(features("knn", rep, splits.val)), splits.val.coords)
    test = None
    if score_test:
        test = error_stats(model.predict(features("knn", rep, splits.test)), splits.test.coords)
    return val, test


def sweep_representation(data, kind: str, axis: str, grid, metric="braycurtis", k=11,
                         n_jobs=1) -> SweepResult:
    """Validation error of kNN for each value of a representation parameter."""
    splits = _splits(data)
    grid = sorted(float(v) for v in grid)
    if not grid:
        raise ConfigError("empty sweep grid")

    def cell(v):
        params = {"alpha": v} if axis == "alpha" else {"beta": v}
        val = _knn_cell(splits, kind, params.get("alpha"), params.get("beta"), metric, k)[0]
        log.info("%s=%g: val mean %.1f m", axis, v, val.mean)
        return val

    if n_jobs == 1:
        stats = [cell(v) for v in grid]
    else:
        stats = Parallel(n_jobs=n_jobs)(delayed(cell)(v) for v in grid)
    means = [s.mean for s in stats]
    best = select_best(grid, means)
    params = {"alpha": best} if axis == "alpha" else {"beta": best}
    _, test = _knn_cell(splits, kind, params.get("alpha"), params.get("beta"), metric, k,
                        score_test=True)
    return SweepResult(axis, grid, means, [s.median for s in stats], best, test)


def sweep_alpha(data, grid=ALPHA_GRID, metric="braycurtis", k=11, n_jobs=1) -> SweepResult:
    return sweep_representation(data, "exponential", "alpha", grid, metric, k, n_jobs)


def sweep_beta(data, grid=BETA_GRID, metric="braycurtis", k=11, n_jobs=1) -> SweepResult:
    return sweep_representation(data, "powed", "beta", grid, metric, k, n_jobs)


@dataclass
class KCell:
    metric: str
    representation: str
    k: int
    mean: float
    median: float
    curve: list = field(default_factory=list, repr=False)


def k_curve(model: knn.KnnModel, queries, truths, k_max: int, n_jobs=1):
    """ErrorStats for every k in 1..k_max from one neighbour search."""
    idx, _ = model.predict_topk(queries, k_max, n_jobs=n_jobs)
    means = knn.neighbor_means(model.coords, idx)
    truths = np.asarray(truths)
    return [summarize(haversine(means[:, k], truths)) for k in range(k_max)]


def _metric_cell(splits, rep, metric, k_max):
    log.info("k sweep %s/%s up to k=%d", metric, rep.kind, k_max)
    xtr = features("knn", rep, splits.train)
    model = knn.fit(xtr, splits.train.coords, metric, 1)
    curve = k_curve(model, features("knn", rep, splits.val), splits.val.coords,
                    min(k_max, len(xtr)))
    ks = list(range(1, len(curve) + 1))
    best = select_best(ks, [s.mean for s in curve])
    s = curve[best - 1]
    return KCell(metric, rep.kind, best, s.mean, s.median, curve)


def sweep_metric_k(data, metrics_=TABLE2_METRICS, representations=represent.KINDS,
                   k_max=30, alpha=BEST_ALPHA, beta=BEST_BETA, n_jobs=1) -> dict:
    """Best k and validation error for every (metric, representation) cell."""
    splits = _splits(data)
    reps = {kind: represent.fit(kind, splits.train, alpha=alpha, beta=beta)
            for kind in representations}
    jobs = [(m, r) for m in metrics_ for r in representations]
    for m, _ in jobs:
        metrics.check_kind(m)
    if n_jobs == 1:
        cells = [_metric_cell(splits, reps[r], m, k_max) for m, r in jobs]
    else:
        cells = Parallel(n_jobs=n_jobs)(
            delayed(_metric_cell)(splits, reps[r], m, k_max) for m, r in jobs)
    return {(c.metric, c.representation): c for c in cells}


def run_boolean_family(data, representation="powed", k_max=30, alpha=BEST_ALPHA,
                       beta=BEST_BETA, n_jobs=1) -> dict:
    """Best-k validation cell for each boolean metric, keyed by metric name."""
    table = sweep_metric_k(data, metrics.BOOLEAN_KINDS, (representation,), k_max,
                           alpha, beta, n_jobs)
    return {m: cell for (m, _), cell in table.items()}


# --- single experiments -----------------------------------------------------

@dataclass
class ExperimentResult:
    method: str
    representation: dict
    params: dict
    stats: dict
    predictions: dict = field(repr=False, default_factory=dict)
    history: neural.TrainingHistory | None = field(repr=False, default=None)

    def to_dict(self):
        return {
            "method": self.method,
            "representation": self.representation,
            "params": self.params,
            "stats": {s: st.to_dict() for s, st in self.stats.items()},
        }


def _etrees_config(params):
    keys = ("n_estimators", "min_samples_split", "min_samples_leaf", "max_depth", "seed")
    unknown = set(params) - set(keys)
    if unknown:
        raise ConfigError(f"unknown etrees keys: {sorted(unknown)}")
    return etrees.ExtraTreesConfig(**params)


def _mlp_config(params):
    p = dict(params)
    if "layer_widths" in p:
        p["layer_widths"] = tuple(p["layer_widths"])
    try:
        return neural.MlpConfig(**p)
    except TypeError as exc:
        raise ConfigError(f"bad mlp config: {exc}") from None


def run_experiment(data, method: str | None = None, representation: dict | None = None,
                   params: dict | None = None, output_dir=None, n_jobs: int = 1,
                   callback=None) -> ExperimentResult:
    """Fit one method on train and score train, val and test.

    ``data`` is an ExperimentSpec (the other arguments default to its
    fields) or a Splits object. Predictions and stats are written to
    ``output_dir`` when given.
    """
    if isinstance(data, ExperimentSpec):
        method = method or data.method
        representation = representation or data.representation
        params = data.params if params is None else params
        output_dir = output_dir or data.output_dir
        n_jobs = data.jobs if n_jobs == 1 else n_jobs
    splits = _splits(data)
    representation = dict(representation or {"kind": "powed", "beta": BEST_BETA})
    params = dict(params or {})
    rep = represent.fit(representation["kind"], splits.train, alpha=representation.get("alpha"),
                        beta=representation.get("beta"), tau=representation.get("tau"))
    X = {s: features(method, rep, splits[s]) for s in SPLITS}
    Y = {s: splits[s].coords for s in SPLITS}

    log.info("fitting %s on %d training rows", method, len(X["train"]))
    history = None
    if method == "knn":
        model = knn.fit(X["train"], Y["train"], params.get("metric", "braycurtis"),
                        int(params.get("k", 14)))

        def predict(x):
            return model.predict(x, n_jobs=n_jobs)
    elif method == "etrees":
        model = etrees.fit(X["train"], Y["train"], _etrees_config(params), n_jobs=n_jobs)
        predict = model.predict
    elif method == "mlp":
        cfg = _mlp_config(params)
        model, history = neural.train(neural.build(cfg), (X["train"], Y["train"]),
                                      (X["val"], Y["val"]), cfg, callback=callback)
        predict = model.predict
    else:
        raise ConfigError(f"unknown method {method!r}")

    result = ExperimentResult(method, representation, params, {}, {}, history)
    out = Path(output_dir) if output_dir else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
        if history is not None:
            write_loss(history, out / "fig5_loss.csv")
    for s in SPLITS:
        pred = predict(X[s])
        result.predictions[s] = pred
        result.stats[s] = error_stats(pred, Y[s])
        if out:
            write_predictions(pred, Y[s], out / f"predictions_{s}.csv")
    if out:
        (out / f"result_{method}.json").write_text(json.dumps(result.to_dict(), indent=2) + "\n")
    return result


# --- report files -----------------------------------------------------------

def _num(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.6f}"


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _num(v) for v in row])
    return Path(path)


def write_table1(hist: dict, path):
    return _write_csv(path, ["gateways", "messages"], sorted(hist.items()))


def write_rssi_histogram(bins, path):
    return _write_csv(path, ["rssi_bin", "count"], bins)


def write_sweep(result: SweepResult | None, path):
    axis = result.axis if result else "value"
    rows = [] if result is None else zip(result.values, result.val_mean, result.val_median)
    return _write_csv(path, [axis, "val_mean", "val_median"], rows)


def write_table2(table: dict, path, representations=represent.KINDS):
    header = ["metric"] + [f"{r}_{c}" for r in representations for c in ("k", "mean", "median")]
    rows = []
    for m in dict.fromkeys(m for m, _ in table):
        row = [m]
        for r in representations:
            cell = table.get((m, r))
            row += ["", "", ""] if cell is None else [cell.k, cell.mean, cell.median]
        rows.append(row)
    return _write_csv(path, header, rows)


def write_table3(results, path):
    header = ["method"] + [f"{s}_{c}" for s in SPLITS for c in ("mean", "median")]
    rows = [[r.method] + [getattr(r.stats[s], c) for s in SPLITS for c in ("mean", "median")]
            for r in results]
    return _write_csv(path, header, rows)


def write_loss(history: neural.TrainingHistory, path):
    rows = [(e, t, v) for e, (t, v) in
            enumerate(zip(history.train_loss, history.val_loss), start=1)]
    return _write_csv(path, ["epoch", "train_loss", "val_loss"], rows)


def write_predictions(pred, truth, path):
    err = haversine(pred, truth)
    rows = [(f"{p[0]:.8f}", f"{p[1]:.8f}", f"{t[0]:.8f}", f"{t[1]:.8f}", e)
            for p, t, e in zip(pred, truth, err)]
    return _write_csv(path, ["pred_lat", "pred_lon", "true_lat", "true_lon", "error_m"], rows)


def emit_report(out_dir, *, table1=None, rssi_hist=None, alpha=None, beta=None,
                table2=None, table3=None, history=None) -> list[Path]:
    """Write whichever result tables are given into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if table1 is not None:
        written.append(write_table1(table1, out / "table1.csv"))
    if rssi_hist is not None:
        written.append(write_rssi_histogram(rssi_hist, out / "fig2_hist.csv"))
    if alpha is not None:
        written.append(write_sweep(alpha, out / "fig3_alpha.csv"))
    if beta is not None:
        written.append(write_sweep(beta, out / "fig4_beta.csv"))
    if table2 is not None:
        written.append(write_table2(table2, out / "table2.csv"))
    if table3 is not None:
        written.append(write_table3(table3, out / "table3.csv"))
    if history is not None:
        written.append(write_loss(history, out / "fig5_loss.csv"))
    return written


def load_results(out_dir) -> list[ExperimentResult]:
    """Experiment results previously written by :func:`run_experiment`."""
    results = []
    for path in sorted(Path(out_dir).glob("result_*.json")):
        doc = json.loads(path.read_text())
        stats = {s: ErrorStats(v["mean"], v["median"],
                               {int(p): q for p, q in v["percentiles"].items()}, v["count"])
                 for s, v in doc["stats"].items()}
        results.append(ExperimentResult(doc["method"], doc["representation"],
                                        doc["params"], stats))
    order = {m: i for i, m in enumerate(METHODS)}
    return sorted(results, key=lambda r: order.get(r.method, len(order)))

