"""kNN on synthetic fingerprints: alpha sweep, beta sweep and the metric x k table."""
from lorafp import harness, ingest, represent, synthetic

data = synthetic.make_dataset(4000, seed=2)
splits = harness.Splits.from_manifest(data, ingest.split_dataset(data, seed=0))
print("train/val/test", len(splits.train), len(splits.val), len(splits.test))

res = harness.sweep_alpha(splits, grid=range(10, 95, 20))
for a, m in zip(res.values, res.val_mean):
    print(f"alpha={a:4.0f}  val mean {m:7.1f} m")
print("picked alpha", res.best, "-> test mean", round(res.test.mean, 1))

res = harness.sweep_beta(splits, grid=[0.8, 1.1, 1.4])
print("picked beta", res.best, "-> test mean", round(res.test.mean, 1))

# one neighbour search per cell gives the whole k curve
table = harness.sweep_metric_k(splits, ("euclidean", "braycurtis"), represent.KINDS, k_max=20)
for (metric, rep), cell in table.items():
    print(f"{metric:>10} {rep:>11}: best k={cell.k:2d}  mean {cell.mean:6.1f}  median {cell.median:6.1f}")

fam = harness.run_boolean_family(splits, k_max=20)
print({m: round(c.mean) for m, c in fam.items()})
