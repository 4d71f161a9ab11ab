"""Extremely randomized trees for two-output (lat, lon) regression.

Each tree is grown on the full training set. At a node, every feature that
is not constant there gets one cut drawn uniformly between its node minimum
and maximum; the cut with the largest summed variance reduction over both
outputs wins. Candidate cuts leaving a child below ``min_samples_leaf`` are
dropped. The forest predicts the unweighted mean of its trees.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from lorafp.errors import ConfigError, FitError

LEAF = -1


@dataclass(frozen=True)
class ExtraTreesConfig:
    n_estimators: int = 100
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    max_depth: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ConfigError("n_estimators must be >= 1")
        if self.min_samples_split < 2:
            raise ConfigError("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1:
            raise ConfigError("min_samples_leaf must be >= 1")
        if self.min_samples_leaf > self.min_samples_split:
            raise ConfigError("min_samples_leaf must not exceed min_samples_split")
        if self.max_depth is not None and self.max_depth < 1:
            raise ConfigError("max_depth must be positive or None")


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat array tree; node 0 is the root, ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    depth: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def max_depth(self) -> int:
        return int(self.depth.max())

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        active = self.feature[node] != LEAF
        while active.any():
            r = rows[active]
            n = node[r]
            go_left = X[r, self.feature[n]] < self.threshold[n]
            node[r] = np.where(go_left, self.left[n], self.right[n])
            active[r] = self.feature[node[r]] != LEAF
        return node

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]


def grow_tree(X, Y, cfg: ExtraTreesConfig, rng: np.random.Generator) -> Tree:
    feature, threshold, left, right, value, n_samples, depth = [], [], [], [], [], [], []

    def new_node(idx, d):
        feature.append(LEAF)
        threshold.append(np.nan)
        left.append(LEAF)
        right.append(LEAF)
        y = Y[idx]
        # offset mean keeps constant targets exact
        value.append(y[0] + (y - y[0]).mean(axis=0))
        n_samples.append(len(idx))
        depth.append(d)
        return len(feature) - 1

    min_leaf = cfg.min_samples_leaf
    stack = [(new_node(np.arange(len(X)), 0), np.arange(len(X)), 0)]
    while stack:
        node, idx, d = stack.pop()
        n = len(idx)
        if n < cfg.min_samples_split or n < 2 * min_leaf:
            continue
        if cfg.max_depth is not None and d >= cfg.max_depth:
            continue
        y = Y[idx]
        if (y == y[0]).all():
            continue
        xs = X[idx]
        lo = xs.min(axis=0)
        hi = xs.max(axis=0)
        cand = np.flatnonzero(lo < hi)
        if cand.size == 0:
            continue
        cuts = lo[cand] + rng.random(cand.size) * (hi[cand] - lo[cand])
        mask = xs[:, cand] < cuts
        n_left = mask.sum(axis=0)
        n_right = n - n_left
        ok = (n_left >= min_leaf) & (n_right >= min_leaf)
        if not ok.any():
            continue
        yc = y - y.mean(axis=0)
        s_left = mask.T.astype(float) @ yc
        s_right = -s_left
        with np.errstate(divide="ignore", invalid="ignore"):
            # SSE reduction up to a node constant; the centered total sum is zero
            score = ((s_left ** 2).sum(1) / n_left + (s_right ** 2).sum(1) / n_right)
        score = np.where(ok, score, -np.inf)
        best = int(np.argmax(score))
        go_left = mask[:, best]
        li, ri = idx[go_left], idx[~go_left]
        feature[node] = int(cand[best])
        threshold[node] = float(cuts[best])
        lnode = new_node(li, d + 1)
        rnode = new_node(ri, d + 1)
        left[node], right[node] = lnode, rnode
        stack.append((rnode, ri, d + 1))
        stack.append((lnode, li, d + 1))

    return Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=float).reshape(-1, Y.shape[1]),
        n_samples=np.asarray(n_samples, dtype=np.int64),
        depth=np.asarray(depth, dtype=np.int64),
    )


@dataclass(frozen=True, eq=False)
class Forest:
    trees: list
    feature_count: int
    config: ExtraTreesConfig

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.feature_count:
            raise ValueError(f"query dimension {X.shape[1]} != {self.feature_count}")
        # running mean: identical tree outputs average back to themselves exactly
        out = np.zeros((len(X), 2))
        for t, tree in enumerate(self.trees, start=1):
            out += (tree.predict(X) - out) / t
        return out[0] if single else out


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    return np.random.default_rng([tree_index, seed])


def fit(features, targets, cfg: ExtraTreesConfig | None = None, n_jobs: int = 1) -> Forest:
    cfg = cfg or ExtraTreesConfig()
    X = np.asarray(features, dtype=float)
    Y = np.asarray(targets, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise FitError("training features must be a non-empty 2-d array")
    if Y.shape != (len(X), 2):
        raise FitError(f"targets shape {Y.shape} does not match {len(X)} rows")
    if not np.isfinite(X).all():
        raise FitError("training features must be finite")

    def one(t):
        return grow_tree(X, Y, cfg, tree_rng(cfg.seed, t))

    if n_jobs == 1:
        trees = [one(t) for t in range(cfg.n_estimators)]
    else:
        trees = Parallel(n_jobs=n_jobs)(delayed(one)(t) for t in range(cfg.n_estimators))
    return Forest(trees, X.shape[1], cfg)
