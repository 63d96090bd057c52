"""Fuzzy K-means objective, optimal updates and negligible-cluster handling."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import kernels


class DimensionError(ValueError):
    pass


class InfeasibleError(RuntimeError):
    """An enumeration or oracle would exceed its configured budget."""


@dataclass(frozen=True)
class Tolerances:
    simplex: float = 1e-12
    cost: float = 1e-9


TOL = Tolerances()


@dataclass(frozen=True)
class WeightedDataset:
    """Points in R^D with positive integer weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("a dataset needs at least one point given as an (N, D) array")
        w = np.asarray(self.weights)
        if w.shape != (pts.shape[0],):
            raise DimensionError(f"expected {pts.shape[0]} weights, got shape {w.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        if w.dtype.kind == "f":
            if not np.all(w == np.round(w)):
                raise ValueError("weights must be integers")
        w = w.astype(np.int64)
        if np.any(w < 1):
            raise ValueError("weights must be >= 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def unweighted(cls, points) -> "WeightedDataset":
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        return cls(pts, np.ones(pts.shape[0], dtype=np.int64))

    @property
    def N(self) -> int:
        return self.points.shape[0]

    @property
    def D(self) -> int:
        return self.points.shape[1]

    @property
    def total_weight(self) -> int:
        return int(self.weights.sum())

    @property
    def w_max(self) -> int:
        return int(self.weights.max())

    @property
    def w_min(self) -> int:
        return int(self.weights.min())

    def expand(self) -> "WeightedDataset":
        """Unit-weight dataset holding w(x) copies of every point x."""
        return WeightedDataset.unweighted(np.repeat(self.points, self.weights, axis=0))

    def subset(self, idx) -> "WeightedDataset":
        return WeightedDataset(self.points[idx], self.weights[idx])


def as_dataset(X, weights=None) -> WeightedDataset:
    if isinstance(X, WeightedDataset):
        if weights is not None:
            return WeightedDataset(X.points, weights)
        return X
    if weights is None:
        return WeightedDataset.unweighted(X)
    return WeightedDataset(X, weights)


# Presets for the unspecified algorithm constants (q, a, b, c). "default" keeps
# the library defaults; "compact" is tuned so desk-scale inputs actually
# compress; "stream" shrinks q further because merge-and-reduce runs every
# level at a much smaller epsilon; "conservative" uses larger constants in the
# spirit of the worst-case analysis and essentially never compresses below
# ~1e9 points.
CONSTANT_PRESETS = {
    "default": dict(const_q=1.0, const_a=1.0, const_b=4.0, const_c=4.0),
    "compact": dict(const_q=1e-5, const_a=1.0 / 16.0, const_b=4.0, const_c=4.0),
    "stream": dict(const_q=2e-8, const_a=1.0 / 16.0, const_b=4.0, const_c=4.0),
    "conservative": dict(const_q=16.0, const_a=44.0, const_b=64.0, const_c=16.0),
}


@dataclass(frozen=True)
class FuzzyParams:
    """Problem and algorithm parameters.

    ``alpha`` and ``beta`` describe the bicriteria approximation: the assumed
    cost inflation and the center-count inflation (``ceil(beta * K)`` centers).
    """

    K: int
    m: float = 2.0
    epsilon: float = 0.2
    delta: float = 0.1
    const_q: float = 1.0
    const_a: float = 1.0
    const_b: float = 4.0
    const_c: float = 4.0
    alpha: float = 16.0
    beta: float = 2.0

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ValueError("K must be a positive integer")
        if not self.m > 1.0:
            raise ValueError("fuzzifier m must be > 1")
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in (0, 1]")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        for name in ("const_q", "const_a", "const_b", "const_c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.alpha < 1.0 or self.beta < 1.0:
            raise ValueError("alpha and beta must be >= 1")
        object.__setattr__(self, "K", int(self.K))

    @classmethod
    def preset(cls, name: str, **kwargs) -> "FuzzyParams":
        try:
            consts = CONSTANT_PRESETS[name]
        except KeyError:
            raise ValueError(f"unknown preset {name!r}; choose from {sorted(CONSTANT_PRESETS)}") from None
        return cls(**{**consts, **kwargs})

    def with_epsilon(self, epsilon: float) -> "FuzzyParams":
        return replace(self, epsilon=epsilon)


def _means_array(M, D: Optional[int] = None) -> np.ndarray:
    M = np.ascontiguousarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M.reshape(-1, 1) if D in (None, 1) else M.reshape(1, -1)
    if M.ndim != 2 or M.shape[0] < 1:
        raise ValueError("a mean set needs at least one mean")
    if D is not None and M.shape[1] != D:
        raise DimensionError(f"means have dimension {M.shape[1]}, data has {D}")
    return M


def check_memberships(r, n: int, k: Optional[int] = None, tol: float = TOL.simplex) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    if r.ndim == 1:
        r = r.reshape(n, -1)
    if r.shape[0] != n or (k is not None and r.shape[1] != k):
        raise DimensionError(f"membership matrix has shape {r.shape}, expected ({n}, {k})")
    if np.any(r < 0.0) or np.any(r > 1.0):
        raise ValueError("memberships must lie in [0, 1]")
    dev = np.abs(r.sum(axis=1) - 1.0)
    if np.any(dev > tol):
        raise ValueError(f"membership rows must sum to 1 (worst deviation {dev.max():.3g})")
    return r


def fuzzy_cost(X, M, r, m: float) -> float:
    """Weighted fuzzy cost sum_x w(x) sum_k r(x,k)^m ||x - mu_k||^2 for given memberships."""
    X = as_dataset(X)
    M = _means_array(M, X.D)
    r = check_memberships(r, X.N, M.shape[0])
    D2 = kernels.sq_dists(X.points, M)
    return float(np.sum(X.weights * np.sum(r ** m * D2, axis=1)))


def optimal_memberships(X, M, m: float) -> np.ndarray:
    """Closed-form memberships minimizing the cost for fixed means.

    A point lying on t of the means splits its membership evenly among them.
    """
    X = as_dataset(X)
    return kernels.memberships(X.points, _means_array(M, X.D), m)


def optimal_means(X, r, m: float, on_degenerate: str = "centroid") -> np.ndarray:
    """Means minimizing the cost for fixed memberships.

    A column with zero mass has no preferred location; ``on_degenerate``
    chooses between the weighted centroid of X (default) and raising.
    """
    X = as_dataset(X)
    r = check_memberships(r, X.N)
    coef = X.weights[:, None] * r ** m
    mass = coef.sum(axis=0)
    dead = mass <= 0.0
    if dead.any() and on_degenerate == "raise":
        raise ValueError(f"clusters {np.flatnonzero(dead).tolist()} have zero membership mass")
    safe = np.where(dead, 1.0, mass)
    means = (coef.T @ X.points) / safe[:, None]
    if dead.any():
        means[dead] = np.average(X.points, axis=0, weights=X.weights)
    return means


def fuzzy_cost_of_means(X, M, m: float) -> float:
    X = as_dataset(X)
    per_point = kernels.point_costs(X.points, _means_array(M, X.D), m)
    return float(np.sum(X.weights * per_point))


def cluster_size(X, r, m: float, k: int) -> float:
    X = as_dataset(X)
    r = check_memberships(r, X.N)
    if not 0 <= k < r.shape[1]:
        raise IndexError(f"cluster index {k} out of range for {r.shape[1]} clusters")
    return float(np.sum(X.weights * r[:, k] ** m))


def cluster_cost(X, M, r, m: float, k: int) -> float:
    X = as_dataset(X)
    M = _means_array(M, X.D)
    r = check_memberships(r, X.N, M.shape[0])
    if not 0 <= k < M.shape[0]:
        raise IndexError(f"cluster index {k} out of range for {M.shape[0]} means")
    diff = X.points - M[k]
    return float(np.sum(X.weights * r[:, k] ** m * np.einsum("ij,ij->i", diff, diff)))


def kmeans_cost(X, M) -> float:
    X = as_dataset(X)
    _, d2 = kernels.nearest(X.points, _means_array(M, X.D))
    return float(np.sum(X.weights * d2))


@dataclass
class FMResult:
    means: np.ndarray
    memberships: np.ndarray
    costs: list = field(default_factory=list)
    n_iter: int = 0
    converged: bool = False


def fm_algorithm(X, K: int, m: float, init, max_iters: int = 300, tol: float = 1e-9) -> FMResult:
    """Alternating optimization of memberships and means from ``init``.

    ``costs[0]`` is the cost of ``init``; an update that fails to lower the
    cost (rounding at a fixed point) is rejected, so the trace never rises.
    """
    X = as_dataset(X)
    M = _means_array(init, X.D)
    if M.shape[0] != K:
        raise ValueError(f"init has {M.shape[0]} means, expected K={K}")
    cost = fuzzy_cost_of_means(X, M, m)
    costs = [cost]
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        r = optimal_memberships(X, M, m)
        M_new = optimal_means(X, r, m)
        new = fuzzy_cost_of_means(X, M_new, m)
        if new > cost:
            converged = True
            it -= 1
            break
        costs.append(new)
        M = M_new
        if cost == 0.0 or (cost - new) <= tol * cost:
            converged = True
            cost = new
            break
        cost = new
    return FMResult(M, optimal_memberships(X, M, m), costs, it, converged)


def negligible_threshold(K: int, epsilon: float, m: float) -> float:
    return epsilon / (4.0 * m * K * K)


def is_negligible(r, k: int, K: int, epsilon: float, m: float) -> bool:
    """True when every membership in column k is at most epsilon / (4 m K^2)."""
    r = np.asarray(r, dtype=np.float64)
    if r.ndim == 1:
        r = r.reshape(-1, 1)
    if not 0 <= k < r.shape[1]:
        raise IndexError(f"cluster index {k} out of range")
    return bool(r[:, k].max() <= negligible_threshold(K, epsilon, m))


def negligible_columns(r, K: int, epsilon: float, m: float) -> np.ndarray:
    return np.asarray(r).max(axis=0) <= negligible_threshold(K, epsilon, m)


def remove_negligible_means(X, M, m: float, K: int, epsilon: float) -> np.ndarray:
    """Drop means whose clusters are negligible until none remain.

    Each round recomputes optimal memberships and removes every negligible
    mean at once. The largest membership of a point is at least 1/|M| > the
    threshold, so the result is never empty.
    """
    X = as_dataset(X)
    M = _means_array(M, X.D)
    if M.shape[0] > K:
        raise ValueError(f"|M| = {M.shape[0]} exceeds K = {K}")
    while True:
        r = optimal_memberships(X, M, m)
        drop = negligible_columns(r, K, epsilon, m)
        if not drop.any():
            return M
        M = M[~drop]


def _simplex_grid(n: int, k: int) -> np.ndarray:
    """All nonnegative integer k-vectors summing to n."""
    if k == 1:
        return np.array([[n]], dtype=np.int64)
    parts = []
    for a in range(n + 1):
        rest = _simplex_grid(n - a, k - 1)
        parts.append(np.hstack([np.full((rest.shape[0], 1), a, dtype=np.int64), rest]))
    return np.vstack(parts)


def brute_force_fuzzy_cost(X, M, m: float, grid_resolution: float = 1e-3, budget: int = 50_000_000) -> float:
    """Test oracle: minimize each point's membership over a simplex grid.

    Valid because the cost separates over points once the means are fixed.
    """
    from math import comb

    X = as_dataset(X)
    M = _means_array(M, X.D)
    K = M.shape[0]
    steps = int(round(1.0 / grid_resolution))
    size = comb(steps + K - 1, K - 1)
    if size * X.N > budget:
        raise InfeasibleError(f"simplex grid needs {size * X.N} evaluations, budget is {budget}")
    G = _simplex_grid(steps, K).astype(np.float64) / steps
    Gm = G ** m
    D2 = _direct_sq_dists(X.points, M)
    best = (Gm @ D2.T).min(axis=0)
    return float(np.sum(X.weights * best))


def _direct_sq_dists(A, B):
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)
