import numpy as np
import pytest

from lorafp import etrees
from lorafp.errors import ConfigError, FitError
from lorafp.etrees import LEAF, ExtraTreesConfig


def _data(rng, n=120, d=6, distinct=True):
    X = rng.integers(0, 20, size=(n, d)).astype(float)
    if distinct:
        X[:, 0] = rng.permutation(n)
    Y = np.column_stack([51.2 + 0.01 * X[:, 1] + 0.001 * rng.random(n),
                         4.4 + 0.01 * X[:, 2] + 0.001 * rng.random(n)])
    return X, Y


def _node_samples(tree, X):
    """Training rows passing through each node, recomputed by routing."""
    members = {0: np.arange(len(X))}
    for node in range(tree.node_count):
        idx = members[node]
        if tree.feature[node] != LEAF:
            go = X[idx, tree.feature[node]] < tree.threshold[node]
            members[tree.left[node]] = idx[go]
            members[tree.right[node]] = idx[~go]
    return members


def test_config_validation():
    with pytest.raises(ConfigError):
        ExtraTreesConfig(min_samples_split=1)
    with pytest.raises(ConfigError):
        ExtraTreesConfig(min_samples_split=2, min_samples_leaf=3)
    with pytest.raises(ConfigError):
        ExtraTreesConfig(max_depth=0)
    with pytest.raises(ConfigError):
        ExtraTreesConfig(n_estimators=0)


def test_empty_training_set():
    with pytest.raises(FitError):
        etrees.fit(np.empty((0, 3)), np.empty((0, 2)))


def test_constant_targets_single_leaf(rng):
    X, _ = _data(rng)
    Y = np.tile([51.2, 4.4], (len(X), 1))
    f = etrees.fit(X, Y, ExtraTreesConfig(n_estimators=5))
    assert all(t.node_count == 1 for t in f.trees)
    np.testing.assert_array_equal(f.predict(rng.random((4, X.shape[1]))), np.tile([51.2, 4.4], (4, 1)))


def test_min_samples_split_above_n(rng):
    X, Y = _data(rng, n=30)
    f = etrees.fit(X, Y, ExtraTreesConfig(n_estimators=3, min_samples_split=31))
    assert all(t.node_count == 1 for t in f.trees)
    np.testing.assert_allclose(f.predict(X[:3]), np.tile(Y.mean(0), (3, 1)), rtol=1e-15)


def test_memorization(rng):
    X, Y = _data(rng, n=200)
    f = etrees.fit(X, Y, ExtraTreesConfig(n_estimators=10, min_samples_split=2,
                                          min_samples_leaf=1, max_depth=None, seed=3))
    np.testing.assert_array_equal(f.predict(X), Y)


def test_determinism_and_seed(rng):
    X, Y = _data(rng)
    cfg = ExtraTreesConfig(n_estimators=4, seed=9)
    a, b = etrees.fit(X, Y, cfg), etrees.fit(X, Y, cfg)
    for ta, tb in zip(a.trees, b.trees):
        np.testing.assert_array_equal(ta.feature, tb.feature)
        np.testing.assert_array_equal(ta.threshold, tb.threshold)
    q = rng.random((10, X.shape[1])) * 20
    np.testing.assert_array_equal(a.predict(q), b.predict(q))
    c = etrees.fit(X, Y, ExtraTreesConfig(n_estimators=4, seed=10))
    assert not np.array_equal(a.predict(q), c.predict(q))


def test_parallel_growth_matches_serial(rng):
    X, Y = _data(rng)
    cfg = ExtraTreesConfig(n_estimators=4, seed=2)
    q = rng.random((10, X.shape[1])) * 20
    np.testing.assert_array_equal(etrees.fit(X, Y, cfg, n_jobs=2).predict(q),
                                  etrees.fit(X, Y, cfg).predict(q))


def test_identical_trees_average_to_single_tree(rng):
    X, Y = _data(rng)
    tree = etrees.grow_tree(X, Y, ExtraTreesConfig(), etrees.tree_rng(0, 0))
    f = etrees.Forest([tree, tree], X.shape[1], ExtraTreesConfig(n_estimators=2))
    q = rng.random((20, X.shape[1])) * 20
    np.testing.assert_array_equal(f.predict(q), tree.predict(q))


def test_structure_invariants(rng):
    for trial in range(10):
        X, Y = _data(rng, n=int(rng.integers(20, 150)), distinct=bool(trial % 2))
        leaf = int(rng.integers(1, 6))
        cfg = ExtraTreesConfig(n_estimators=2, min_samples_leaf=leaf,
                               min_samples_split=int(rng.integers(leaf, 12)) if leaf > 1 else 2,
                               max_depth=int(rng.integers(1, 8)), seed=trial)
        f = etrees.fit(X, Y, cfg)
        for tree in f.trees:
            members = _node_samples(tree, X)
            assert tree.max_depth <= cfg.max_depth
            for node in range(tree.node_count):
                idx = members[node]
                assert len(idx) == tree.n_samples[node]
                if tree.feature[node] == LEAF:
                    assert len(idx) >= cfg.min_samples_leaf
                    np.testing.assert_allclose(tree.value[node], Y[idx].mean(0), rtol=1e-14)
                else:
                    col = X[idx, tree.feature[node]]
                    assert col.min() < tree.threshold[node] <= col.max()
                    assert len(idx) >= cfg.min_samples_split
        pred = f.predict(rng.random((30, X.shape[1])) * 20)
        assert np.all(pred >= Y.min(0) - 1e-12) and np.all(pred <= Y.max(0) + 1e-12)


def test_chosen_split_maximizes_variance_reduction():
    # two features, the second alone explains the targets: the root split must use it
    rng = np.random.default_rng(0)
    X = np.column_stack([rng.random(100), np.repeat([0.0, 1.0], 50)])
    Y = np.column_stack([np.repeat([0.0, 10.0], 50), np.repeat([0.0, 10.0], 50)])
    for seed in range(5):
        tree = etrees.grow_tree(X, Y, ExtraTreesConfig(max_depth=1), etrees.tree_rng(seed, 0))
        assert tree.feature[0] == 1


def test_dimension_mismatch(rng):
    X, Y = _data(rng)
    f = etrees.fit(X, Y, ExtraTreesConfig(n_estimators=1))
    with pytest.raises(ValueError):
        f.predict(np.zeros(X.shape[1] + 1))


def test_accuracy_on_par_with_reference_toolkit(small_splits):
    sk = pytest.importorskip("sklearn.ensemble")
    from lorafp import harness, represent
    from lorafp.eval import error_stats

    rep = represent.fit("powed", small_splits.train, beta=1.1)
    xtr = harness.features("etrees", rep, small_splits.train)
    xva = harness.features("etrees", rep, small_splits.val)
    ytr, yva = small_splits.train.coords, small_splits.val.coords
    ours = etrees.fit(xtr, ytr, ExtraTreesConfig(n_estimators=30, min_samples_split=14,
                                                  max_depth=40, seed=1))
    ref = sk.ExtraTreesRegressor(n_estimators=30, min_samples_split=14, max_depth=40,
                                 max_features=1.0, random_state=1).fit(xtr, ytr)
    a = error_stats(ours.predict(xva), yva).mean
    b = error_stats(ref.predict(xva), yva).mean
    assert abs(a - b) / b < 0.1
