"""Numpy implementations of the hot kernels.

Every function here has a compiled twin in ``_ckernels.pyx`` with the same
signature. Both evaluate the optimal fuzzy membership in the ratio form

    r_k = (d_min / d_k)^(1/(m-1)) / sum_l (d_min / d_l)^(1/(m-1))

whose terms lie in [0, 1], so nothing overflows as m approaches 1.
"""
import numpy as np

_CHUNK = 1 << 15


def sq_dists(X, C):
    X = np.ascontiguousarray(X, dtype=np.float64)
    C = np.ascontiguousarray(C, dtype=np.float64)
    out = np.empty((X.shape[0], C.shape[0]), dtype=np.float64)
    for k in range(C.shape[0]):
        diff = X - C[k]
        out[:, k] = np.einsum("ij,ij->i", diff, diff)
    return out


def nearest(X, C):
    """Index of the closest center (lowest index on ties) and its squared distance."""
    D2 = sq_dists(X, C)
    labels = np.argmin(D2, axis=1).astype(np.int64)
    return labels, D2[np.arange(D2.shape[0]), labels]


def _ratios(D2, m):
    e = 1.0 / (m - 1.0)
    dmin = D2.min(axis=1)
    zero = D2 == 0.0
    with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
        ratio = (dmin[:, None] / D2) ** e
    rows = zero.any(axis=1)
    if rows.any():
        ratio[rows] = zero[rows].astype(np.float64)
    return ratio, dmin, rows


def memberships_d2(D2, m):
    D2 = np.asarray(D2, dtype=np.float64)
    ratio, _, _ = _ratios(D2, m)
    return ratio / ratio.sum(axis=1, keepdims=True)


def point_costs_d2(D2, m):
    """Per-point fuzzy cost under optimal memberships: d_min * (sum ratio)^(1-m)."""
    D2 = np.asarray(D2, dtype=np.float64)
    ratio, dmin, rows = _ratios(D2, m)
    cost = dmin * ratio.sum(axis=1) ** (1.0 - m)
    cost[rows] = 0.0
    return cost


def memberships(X, C, m):
    return memberships_d2(sq_dists(X, C), m)


def point_costs(X, C, m):
    out = np.empty(np.asarray(X).shape[0], dtype=np.float64)
    for start in range(0, out.shape[0], _CHUNK):
        stop = start + _CHUNK
        out[start:stop] = point_costs_d2(sq_dists(X[start:stop], C), m)
    return out


def subset_costs(D2, w, subsets, m):
    """Weighted fuzzy cost of each column subset of a precomputed distance matrix."""
    D2 = np.asarray(D2, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    subsets = np.asarray(subsets, dtype=np.int64)
    out = np.empty(subsets.shape[0], dtype=np.float64)
    step = max(1, _CHUNK // max(1, D2.shape[0]))
    for start in range(0, subsets.shape[0], step):
        block = subsets[start:start + step]
        sub = D2[:, block]  # (N, S, K)
        n, s, k = sub.shape
        costs = point_costs_d2(sub.transpose(1, 0, 2).reshape(s * n, k), m).reshape(s, n)
        out[start:start + step] = (costs * w).sum(axis=1)
    return out
