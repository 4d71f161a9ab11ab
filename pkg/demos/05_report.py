"""End to end: write a CSV, split it, run all three methods, collect table3.csv."""
import sys
import tempfile
from pathlib import Path

from lorafp import cli, ingest, synthetic

work = Path(sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="lorafp-"))
work.mkdir(parents=True, exist_ok=True)
ingest.save_dataset(synthetic.make_dataset(3000, seed=5), work / "data.csv")

cli.main(["ingest-check", "--data", str(work / "data.csv"), "--out", str(work)])
cli.main(["split", "--data", str(work / "data.csv"), "--seed", "0", "--out", str(work)])

methods = {
    "knn": "knn: {metric: braycurtis, k: 14}",
    "etrees": "etrees: {n_estimators: 30, min_samples_split: 14, max_depth: 40}",
    "mlp": "mlp: {layer_widths: [128, 64, 2], max_epochs: 100, patience: 10, batch_size: 64}",
}
for method, params in methods.items():
    cfg = work / f"{method}.yaml"
    cfg.write_text(
        "dataset: {path: data.csv}\n"
        "split: {manifest: split.json}\n"
        "representation: {kind: powed, beta: 1.1}\n"
        f"method: {method}\n{params}\noutput: runs\n"
    )
    cli.main(["run", "--config", str(cfg)])

cli.main(["report", "--out", str(work / "runs")])
print((work / "runs" / "table3.csv").read_text())
print("files in", work / "runs", ":", sorted(p.name for p in (work / "runs").iterdir()))
