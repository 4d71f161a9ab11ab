"""How the four RSSI representations reshape a fingerprint."""
import numpy as np

from lorafp import represent, synthetic

data = synthetic.make_dataset(3000, seed=1)
print(len(data), "messages,", data.rssi.shape[1], "gateway columns")

# fitted on training data only: records the weakest and strongest reading
cfg = represent.fit("positive", data)
print("train_min", cfg.train_min, "train_max", cfg.train_max)

row = data.rssi[0]
heard = np.flatnonzero(row != -200)
print("raw readings:", row[heard])

for kind in represent.KINDS:
    c = represent.fit(kind, data, alpha=60, beta=1.1)
    x = c(row)
    print(f"{kind:>12}: heard {np.round(x[heard], 4)}  silent -> {x[row == -200][0]:.4g}")

# a weak signal sits near zero after powed with beta > 1, a strong one near 1
grid = np.arange(cfg.train_min, 0)
for beta in (0.7, 1.0, 1.7):
    c = represent.RepresentationConfig("powed", cfg.train_min, cfg.train_max, beta=beta)
    y = c(grid)
    print(f"beta={beta}: value at midpoint {y[len(y) // 2]:.3f}")
