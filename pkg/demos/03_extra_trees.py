"""Extra Trees: depth and leaf size trade training fit for held-out error."""
import numpy as np

from lorafp import etrees, harness, ingest, represent, synthetic
from lorafp.eval import error_stats

data = synthetic.make_dataset(4000, seed=3)
splits = harness.Splits.from_manifest(data, ingest.split_dataset(data, seed=0))
rep = represent.fit("powed", splits.train, beta=1.1)
X = {s: harness.features("etrees", rep, splits[s]) for s in harness.SPLITS}

for split, depth in [(2, None), (14, 40), (14, 8), (50, None)]:
    cfg = etrees.ExtraTreesConfig(n_estimators=30, min_samples_split=split, max_depth=depth)
    forest = etrees.fit(X["train"], splits.train.coords, cfg)
    tr = error_stats(forest.predict(X["train"]), splits.train.coords)
    va = error_stats(forest.predict(X["val"]), splits.val.coords)
    depth_seen = max(t.max_depth for t in forest.trees)
    print(f"split={split:3d} depth<={depth}: train {tr.mean:6.1f} m  val {va.mean:6.1f} m"
          f"  (deepest tree {depth_seen})")

# same seed, same forest
a = etrees.fit(X["train"], splits.train.coords, etrees.ExtraTreesConfig(n_estimators=5, seed=7))
b = etrees.fit(X["train"], splits.train.coords, etrees.ExtraTreesConfig(n_estimators=5, seed=7))
print("reproducible:", np.array_equal(a.predict(X["test"]), b.predict(X["test"])))
