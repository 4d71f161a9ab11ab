"""Distance functions for nearest-neighbour search over fingerprint vectors.

Real-valued kinds share one compiled per-pair kernel that accumulates
feature by feature, so a distance is bit-identical whether it is computed
alone, row-paired or inside a query-by-train block. Boolean kinds binarize
first (non-zero is True) and work on exact integer counts.
"""

from __future__ import annotations

import numpy as np
from numba import njit

REAL_KINDS = ("euclidean", "manhattan", "chebyshev", "hamming", "canberra", "braycurtis")
BOOLEAN_KINDS = ("jaccard", "matching", "dice", "kulsinski")
KINDS = REAL_KINDS + BOOLEAN_KINDS


def check_kind(kind: str) -> str:
    if kind not in KINDS:
        raise ValueError(f"unknown metric {kind!r}; expected one of {KINDS}")
    return kind


def is_boolean(kind: str) -> bool:
    return kind in BOOLEAN_KINDS


_CODES = {kind: i for i, kind in enumerate(REAL_KINDS)}


@njit(cache=True)
def _row_distance(code, x, y):
    """One real-valued distance; every public entry point goes through here."""
    n = x.shape[0]
    acc = 0.0
    den = 0.0
    for f in range(n):
        a = x[f]
        b = y[f]
        if code == 0:
            d = a - b
            acc += d * d
        elif code == 1:
            acc += abs(a - b)
        elif code == 2:
            d = abs(a - b)
            if d > acc:
                acc = d
        elif code == 3:
            if a != b:
                acc += 1.0
        elif code == 4:
            s = abs(a) + abs(b)
            if s != 0.0:
                acc += abs(a - b) / s
        else:
            acc += abs(a - b)
            den += abs(a + b)
    if code == 0:
        return np.sqrt(acc)
    if code == 3:
        return acc / n
    if code == 5:
        return acc / den if den != 0.0 else 0.0
    return acc


@njit(nogil=True, cache=True)
def _pairwise_real(code, X, Y, out):
    for i in range(X.shape[0]):
        for j in range(Y.shape[0]):
            out[i, j] = _row_distance(code, X[i], Y[j])


@njit(nogil=True, cache=True)
def _paired_real(code, X, Y, out):
    for i in range(X.shape[0]):
        out[i] = _row_distance(code, X[i], Y[i])


def _safe_div(num, den):
    out = np.zeros(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=den != 0)
    return out


def _boolean(kind, ntt, nx, ny, n):
    unequal = nx + ny - 2.0 * ntt
    if kind == "jaccard":
        return _safe_div(unequal, ntt + unequal)
    if kind == "matching":
        return unequal / n
    if kind == "dice":
        return _safe_div(unequal, 2.0 * ntt + unequal)
    return (unequal - ntt + n) / (unequal + n)


def _as_2d(a):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {a.shape}")
    return a


def pairwise(kind: str, X, Y) -> np.ndarray:
    """Distance matrix ``D[i, j] = distance(kind, X[i], Y[j])``."""
    check_kind(kind)
    X, Y = _as_2d(X), _as_2d(Y)
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    n = X.shape[1]
    if n == 0:
        raise ValueError("vectors must have at least one entry")
    if is_boolean(kind):
        xb = (X != 0).astype(float)
        yb = (Y != 0).astype(float)
        ntt = xb @ yb.T
        return _boolean(kind, ntt, xb.sum(1)[:, None], yb.sum(1)[None, :], n)
    out = np.empty((len(X), len(Y)))
    _pairwise_real(_CODES[kind], np.ascontiguousarray(X), np.ascontiguousarray(Y), out)
    return out


def paired(kind: str, X, Y) -> np.ndarray:
    """Row-wise distances ``d[i] = distance(kind, X[i], Y[i])``."""
    check_kind(kind)
    X, Y = _as_2d(X), _as_2d(Y)
    if X.shape != Y.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {Y.shape}")
    n = X.shape[1]
    if n == 0:
        raise ValueError("vectors must have at least one entry")
    if is_boolean(kind):
        xb = X != 0
        yb = Y != 0
        ntt = (xb & yb).sum(1).astype(float)
        return _boolean(kind, ntt, xb.sum(1).astype(float), yb.sum(1).astype(float), n)
    out = np.empty(len(X))
    _paired_real(_CODES[kind], np.ascontiguousarray(X), np.ascontiguousarray(Y), out)
    return out


def distance(kind: str, x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError(f"vectors must be 1-d and equal length, got {x.shape} and {y.shape}")
    return float(pairwise(kind, x[None, :], y[None, :])[0, 0])
