"""Exhaustive k-nearest-neighbour position regressor.

The estimate is the unweighted mean of the k nearest training coordinates.
Neighbours are ordered by distance, then by training index, so results are
deterministic and do not depend on how queries are batched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from lorafp import metrics
from lorafp.errors import ConfigError

# target size (in float64 entries) of one query-by-train distance block
_BLOCK_ENTRIES = 4_000_000


@dataclass(frozen=True, eq=False)
class KnnModel:
    features: np.ndarray
    coords: np.ndarray
    metric: str
    k: int

    @property
    def n_train(self) -> int:
        return len(self.features)

    def predict_topk(self, queries, k_max: int, n_jobs: int = 1):
        """Indices and distances of the ``k_max`` nearest training rows.

        Returns ``(indices, distances)``, each ``(n_queries, k_max)`` (or 1-d
        for a single query), sorted by distance with ties broken by the lower
        training index.
        """
        q, single = self._queries(queries)
        if not 1 <= k_max <= self.n_train:
            raise ConfigError(f"k_max={k_max} must be in [1, {self.n_train}]")
        step = max(1, _BLOCK_ENTRIES // max(self.n_train, 1))
        chunks = [q[i:i + step] for i in range(0, len(q), step)]
        if n_jobs == 1 or len(chunks) == 1:
            parts = [self._topk_block(c, k_max) for c in chunks]
        else:
            parts = Parallel(n_jobs=n_jobs, prefer="threads")(
                delayed(self._topk_block)(c, k_max) for c in chunks)
        if parts:
            idx = np.concatenate([p[0] for p in parts])
            dist = np.concatenate([p[1] for p in parts])
        else:
            idx = np.empty((0, k_max), dtype=np.int64)
            dist = np.empty((0, k_max))
        if single:
            return idx[0], dist[0]
        return idx, dist

    def _topk_block(self, q, k_max):
        d = metrics.pairwise(self.metric, q, self.features)
        n = d.shape[1]
        idx = np.empty((len(q), k_max), dtype=np.int64)
        if k_max == n:
            for r in range(len(q)):
                idx[r] = np.argsort(d[r], kind="stable")
        else:
            kth = np.partition(d, k_max - 1, axis=1)[:, k_max - 1]
            for r in range(len(q)):
                cand = np.flatnonzero(d[r] <= kth[r])
                idx[r] = cand[np.argsort(d[r, cand], kind="stable")[:k_max]]
        return idx, np.take_along_axis(d, idx, axis=1)

    def predict(self, queries, n_jobs: int = 1) -> np.ndarray:
        """(lat, lon) estimates, shape (n_queries, 2) or (2,) for one query."""
        q, single = self._queries(queries)
        idx, _ = self.predict_topk(q, self.k, n_jobs=n_jobs)
        out = neighbor_means(self.coords, idx)[:, -1]
        return out[0] if single else out

    def _queries(self, queries):
        q = np.asarray(queries, dtype=float)
        single = q.ndim == 1
        q = np.atleast_2d(q)
        if q.ndim != 2 or q.shape[1] != self.features.shape[1]:
            raise ValueError(f"query dimension {q.shape[-1]} does not match "
                             f"feature dimension {self.features.shape[1]}")
        return q, single


def neighbor_means(coords, indices) -> np.ndarray:
    """Running means of neighbour coordinates.

    ``out[i, k-1]`` is the mean position of the first ``k`` neighbours of
    query ``i``; shape ``(n_queries, k_max, 2)``.
    """
    pts = np.asarray(coords)[np.asarray(indices)]
    counts = np.arange(1, pts.shape[1] + 1, dtype=float)[None, :, None]
    return np.cumsum(pts, axis=1) / counts


def fit(train_features, train_coords, metric: str = "braycurtis", k: int = 11) -> KnnModel:
    features = np.array(train_features, dtype=float)
    coords = np.array(train_coords, dtype=float)
    if features.ndim != 2 or len(features) == 0:
        raise ConfigError("training features must be a non-empty 2-d array")
    if coords.shape != (len(features), 2):
        raise ConfigError(f"coords shape {coords.shape} does not match {len(features)} rows")
    metrics.check_kind(metric)
    if not 1 <= k <= len(features):
        raise ConfigError(f"k={k} must be in [1, {len(features)}]")
    features.setflags(write=False)
    coords.setflags(write=False)
    return KnnModel(features, coords, metric, int(k))
