"""Independent reference computations shared by the unit and acceptance tests."""

import math

import numpy as np

from lorafp import metrics, represent
from lorafp.ingest import SENTINEL


def brute_force_knn(train_x, train_y, query, metric, k):
    """Sort every training row by (distance, index) and average the first k."""
    scored = sorted((metrics.distance(metric, row, query), i) for i, row in enumerate(train_x))
    chosen = [i for _, i in scored[:k]]
    lat = 0.0
    lon = 0.0
    for i in chosen:
        lat += train_y[i][0]
        lon += train_y[i][1]
    return (lat / k, lon / k), chosen


def random_knn_instance(rng, n_max=200, n_query=5):
    """Sparse fingerprint-like features from integer RSSI through a random representation."""
    n = int(rng.integers(10, n_max + 1))
    d = 68
    rssi = np.full((n + n_query, d), SENTINEL)
    for row in rssi:
        g = rng.choice(d, size=int(rng.integers(1, 4)), replace=False)
        row[g] = rng.integers(-125, -60, size=len(g))
    kind = represent.KINDS[int(rng.integers(4))]
    cfg = represent.fit(kind, rssi[:n], alpha=float(rng.uniform(10, 80)),
                        beta=float(rng.uniform(0.7, 1.7)))
    x = represent.transform(cfg, rssi)
    coords = np.column_stack([51.2 + 0.1 * rng.random(n), 4.4 + 0.1 * rng.random(n)])
    return x[:n], coords, x[n:]


def meridian_arc(radius, degrees):
    return math.pi * radius * degrees / 180.0
