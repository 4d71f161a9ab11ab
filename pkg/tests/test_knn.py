import numpy as np
import pytest

from lorafp import knn, metrics
from lorafp.errors import ConfigError
from oracles import brute_force_knn, random_knn_instance


def test_fit_bounds():
    x = np.eye(5)
    y = np.zeros((5, 2))
    assert knn.fit(x, y, "euclidean", 5).k == 5
    with pytest.raises(ConfigError):
        knn.fit(x, y, "euclidean", 6)
    with pytest.raises(ConfigError):
        knn.fit(x, y, "euclidean", 0)
    with pytest.raises(ValueError):
        knn.fit(x, y, "nope", 1)


def test_exact_match_k1():
    x = np.array([[1.0, 0.0], [0.0, 1.0], [2.0, 2.0]])
    y = np.array([[51.1, 4.1], [51.2, 4.2], [51.3, 4.3]])
    m = knn.fit(x, y, "euclidean", 1)
    np.testing.assert_array_equal(m.predict(x[2]), y[2])


def test_midpoint_k2():
    x = np.array([[0.0], [1.0], [10.0]])
    y = np.array([[51.20, 4.40], [51.22, 4.42], [0.0, 0.0]])
    m = knn.fit(x, y, "manhattan", 2)
    np.testing.assert_allclose(m.predict([0.4]), [51.21, 4.41], rtol=0, atol=1e-12)


def test_dimension_mismatch():
    m = knn.fit(np.eye(3), np.zeros((3, 2)), "euclidean", 1)
    with pytest.raises(ValueError):
        m.predict([1.0, 2.0])


def test_tie_break_by_index():
    x = np.array([[1.0], [1.0], [1.0], [0.0]])
    y = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]])
    m = knn.fit(x, y, "euclidean", 2)
    idx, dist = m.predict_topk([1.0], 3)
    np.testing.assert_array_equal(idx, [0, 1, 2])
    np.testing.assert_array_equal(m.predict([1.0]), [1.5, 1.5])


@pytest.mark.parametrize("metric", metrics.KINDS)
def test_matches_brute_force(metric, rng):
    for _ in range(3):
        x, y, q = random_knn_instance(rng, n_max=60)
        for k in range(1, 11):
            m = knn.fit(x, y, metric, k)
            pred = m.predict(q)
            for qi, row in enumerate(q):
                expected, _ = brute_force_knn(x, y, row, metric, k)
                assert tuple(pred[qi]) == expected


def test_topk_full_permutation_and_prefix(rng):
    x, y, q = random_knn_instance(rng, n_max=50)
    m = knn.fit(x, y, "braycurtis", 1)
    idx, dist = m.predict_topk(q, len(x))
    for row, qrow in zip(idx, q):
        assert sorted(row) == list(range(len(x)))
        _, order = brute_force_knn(x, y, qrow, "braycurtis", len(x))
        assert list(row) == order
    assert np.all(np.diff(dist, axis=1) >= 0)
    big, _ = m.predict_topk(q, 10)
    for k in range(1, 10):
        np.testing.assert_array_equal(m.predict_topk(q, k)[0], big[:, :k])


def test_topk_means_agree_with_predict(rng):
    x, y, _ = random_knn_instance(rng, n_max=200, n_query=0)
    q = x[rng.integers(len(x), size=100)] + rng.random((100, x.shape[1])) * 0.01
    m = knn.fit(x, y, "canberra", 1)
    idx, _ = m.predict_topk(q, 12)
    means = knn.neighbor_means(y, idx)
    for k in (1, 5, 12):
        np.testing.assert_array_equal(means[:, k - 1], knn.fit(x, y, "canberra", k).predict(q))


def test_batching_and_threads_do_not_change_results(rng, monkeypatch):
    x, y, q = random_knn_instance(rng, n_max=150, n_query=40)
    m = knn.fit(x, y, "braycurtis", 7)
    ref = m.predict(q)
    monkeypatch.setattr(knn, "_BLOCK_ENTRIES", 300)
    np.testing.assert_array_equal(m.predict(q), ref)
    np.testing.assert_array_equal(m.predict(q, n_jobs=2), ref)


def test_permutation_invariance_without_ties(rng):
    x = rng.random((80, 10))
    y = rng.random((80, 2))
    q = rng.random((20, 10))
    perm = rng.permutation(80)
    a = knn.fit(x, y, "euclidean", 5).predict(q)
    b = knn.fit(x[perm], y[perm], "euclidean", 5).predict(q)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


def test_duplicate_row_keeps_k1_prediction(rng):
    x, y, q = random_knn_instance(rng, n_max=80)
    base = knn.fit(x, y, "braycurtis", 1).predict(q)
    j = 7
    x2 = np.vstack([x, x[j]])
    y2 = np.vstack([y, y[j]])
    np.testing.assert_array_equal(knn.fit(x2, y2, "braycurtis", 1).predict(q), base)


@pytest.mark.parametrize("metric", metrics.BOOLEAN_KINDS)
def test_boolean_metrics_ignore_magnitudes(metric, rng):
    x, y, q = random_knn_instance(rng, n_max=100)
    a = knn.fit(x, y, metric, 6).predict(q)
    b = knn.fit((x != 0).astype(float), y, metric, 6).predict((q != 0).astype(float))
    np.testing.assert_array_equal(a, b)
