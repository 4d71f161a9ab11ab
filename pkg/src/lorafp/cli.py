"""Command line entry point: ``lorafp <command> --config exp.yaml --out dir``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from lorafp import harness, ingest, metrics, represent
from lorafp.errors import ConfigError, ManifestError, ParseError, SchemaError


def _spec(args) -> harness.ExperimentSpec:
    if args.config:
        spec = harness.ExperimentSpec.from_file(args.config)
    else:
        spec = harness.ExperimentSpec()
    if args.data:
        spec.dataset_path = args.data
    if args.seed is not None:
        spec.split_seed = args.seed
    if args.jobs is not None:
        spec.jobs = args.jobs
    if args.out:
        spec.output_dir = args.out
    return spec


def _out(spec) -> Path:
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_ingest_check(args):
    spec = _spec(args)
    d = ingest.load_dataset(spec.dataset_path, spec.mapping)
    hist = ingest.gateway_histogram(d)
    out = _out(spec)
    harness.emit_report(out, table1=hist,
                        rssi_hist=ingest.rssi_histogram(d, args.bin_width))
    print(f"{len(d)} records")
    for g, c in sorted(hist.items()):
        print(f"  {g} gateways: {c}")


def cmd_split(args):
    spec = _spec(args)
    d = ingest.load_dataset(spec.dataset_path, spec.mapping)
    m = ingest.split_dataset(d, spec.split_seed, spec.fractions)
    path = _out(spec) / "split.json"
    ingest.save_split(m, path)
    print(f"train/val/test = {m.sizes} -> {path}")


def _sweep_args(spec):
    s = spec.sweep
    return s.get("metric", "braycurtis"), int(s.get("k", 11))


def cmd_sweep_alpha(args):
    spec = _spec(args)
    metric, k = _sweep_args(spec)
    grid = spec.sweep.get("alpha_grid", harness.ALPHA_GRID)
    res = harness.sweep_alpha(spec, grid, metric, k, n_jobs=spec.jobs)
    harness.emit_report(_out(spec), alpha=res)
    _print_sweep(res)


def cmd_sweep_beta(args):
    spec = _spec(args)
    metric, k = _sweep_args(spec)
    grid = spec.sweep.get("beta_grid", harness.BETA_GRID)
    res = harness.sweep_beta(spec, grid, metric, k, n_jobs=spec.jobs)
    harness.emit_report(_out(spec), beta=res)
    _print_sweep(res)


def _print_sweep(res):
    for v, m in zip(res.values, res.val_mean):
        print(f"  {res.axis}={v:g}: val mean {m:.1f} m")
    print(f"best {res.axis}={res.best:g}; test mean {res.test.mean:.1f} m, "
          f"median {res.test.median:.1f} m")


def cmd_sweep_table2(args):
    spec = _spec(args)
    s = spec.sweep
    table = harness.sweep_metric_k(
        spec,
        s.get("metrics", harness.TABLE2_METRICS),
        s.get("representations", represent.KINDS),
        int(s.get("k_max", 30)),
        alpha=float(s.get("alpha", harness.BEST_ALPHA)),
        beta=float(s.get("beta", harness.BEST_BETA)),
        n_jobs=spec.jobs,
    )
    out = _out(spec)
    harness.emit_report(out, table2=table)
    if s.get("boolean_family", True):
        rep = s.get("boolean_representation", "powed")
        fam = harness.run_boolean_family(spec, rep, int(s.get("k_max", 30)), n_jobs=spec.jobs)
        harness.write_table2({(m, rep): c for m, c in fam.items()},
                             out / "boolean_family.csv", (rep,))
        for m in metrics.BOOLEAN_KINDS:
            print(f"  {m}: k={fam[m].k} val mean {fam[m].mean:.1f} m")
    for (m, r), c in table.items():
        print(f"  {m:>10} {r:>11}: k={c.k:2d} mean {c.mean:.1f} median {c.median:.1f}")


def cmd_run(args):
    spec = _spec(args)
    res = harness.run_experiment(spec)
    print(json.dumps(res.to_dict()["stats"], indent=2))


def cmd_report(args):
    spec = _spec(args)
    out = _out(spec)
    results = harness.load_results(out)
    harness.emit_report(out, table3=results)
    for r in results:
        cols = "  ".join(f"{s} {r.stats[s].mean:.0f}/{r.stats[s].median:.0f}"
                         for s in harness.SPLITS)
        print(f"{r.method:>7}: {cols}")


COMMANDS = {
    "ingest-check": (cmd_ingest_check, "record count, gateway histogram and RSSI histogram"),
    "split": (cmd_split, "write a seeded train/val/test split manifest"),
    "sweep-alpha": (cmd_sweep_alpha, "kNN validation error over the exponential alpha grid"),
    "sweep-beta": (cmd_sweep_beta, "kNN validation error over the powed beta grid"),
    "sweep-table2": (cmd_sweep_table2, "best k for every metric and representation"),
    "run": (cmd_run, "train one method and score train/val/test"),
    "report": (cmd_report, "collect run results into table3.csv"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="lorafp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (func, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="experiment config (YAML)")
        p.add_argument("--data", help="dataset path, overrides the config")
        p.add_argument("--seed", type=int, help="split seed, overrides the config")
        p.add_argument("--jobs", type=int, help="parallel workers")
        p.add_argument("--out", help="output directory")
        if name == "ingest-check":
            p.add_argument("--bin-width", type=float, default=1.0)
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        args.func(args)
    except (ConfigError, ParseError, SchemaError, ManifestError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
