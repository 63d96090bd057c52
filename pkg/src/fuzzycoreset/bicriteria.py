"""Bicriteria K-means seeding by D^2 over-sampling."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _rng, kernels
from .core import as_dataset, kmeans_cost


@dataclass(frozen=True)
class BicriteriaSolution:
    centers: np.ndarray
    alpha: float
    beta: float
    cost: float

    @property
    def size(self) -> int:
        return self.centers.shape[0]


@dataclass(frozen=True)
class InducedPartition:
    """Nearest-center assignment; ``sq_dist`` is the squared distance to that center."""

    assignment: np.ndarray
    sq_dist: np.ndarray
    n_cells: int

    def cells(self) -> list[np.ndarray]:
        order = np.argsort(self.assignment, kind="stable")
        bounds = np.searchsorted(self.assignment[order], np.arange(self.n_cells + 1))
        return [order[bounds[k]:bounds[k + 1]] for k in range(self.n_cells)]


def restarts(delta: float) -> int:
    """Independent seeding runs needed for failure probability delta."""
    return max(1, math.ceil(math.log2(3.0 / delta)))


def _first_unique(points: np.ndarray) -> np.ndarray:
    _, first = np.unique(points, axis=0, return_index=True)
    return points[np.sort(first)]


def d2_seeding(points, weights, n_centers: int, rng: np.random.Generator) -> np.ndarray:
    """Sample up to n_centers points, each with probability proportional to w(x) d(x, chosen)^2.

    Stops early once every point coincides with a chosen center.
    """
    mass = weights.astype(np.float64)
    cum = np.cumsum(mass)
    idx = min(int(np.searchsorted(cum, rng.random() * cum[-1], side="right")), len(cum) - 1)
    chosen = [idx]
    d2 = kernels.sq_dists(points, points[idx:idx + 1])[:, 0]
    for _ in range(n_centers - 1):
        mass = weights * d2
        cum = np.cumsum(mass)
        if cum[-1] <= 0.0:
            break
        idx = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        idx = min(idx, len(cum) - 1)
        while mass[idx] <= 0.0:
            idx -= 1
        chosen.append(idx)
        np.minimum(d2, kernels.sq_dists(points, points[idx:idx + 1])[:, 0], out=d2)
    return points[chosen].copy()


def bicriteria_kmeans(X, K: int, delta: float, rng_seed: int, alpha: float = 16.0, beta: float = 2.0) -> BicriteriaSolution:
    """Cheapest of ceil(log2(3/delta)) D^2 over-seedings with ceil(beta K) centers each.

    ``alpha`` is recorded, not certified: downstream formulas treat it as the
    cost inflation of the returned centers.
    """
    X = as_dataset(X)
    if X.N <= K:
        centers = _first_unique(X.points)
        return BicriteriaSolution(centers, alpha, beta, kmeans_cost(X, centers))
    n_centers = math.ceil(beta * K)
    best = None
    for run in range(restarts(delta)):
        rng = _rng.derive_rng(rng_seed, _rng.BICRITERIA, run)
        centers = d2_seeding(X.points, X.weights, n_centers, rng)
        cost = kmeans_cost(X, centers)
        if best is None or cost < best[1]:
            best = (centers, cost)
    return BicriteriaSolution(best[0], alpha, beta, best[1])


def induce_partition(X, A) -> InducedPartition:
    """Assign each point to its nearest center, ties to the lowest center index."""
    X = as_dataset(X)
    centers = A.centers if isinstance(A, BicriteriaSolution) else np.asarray(A, dtype=np.float64)
    labels, d2 = kernels.nearest(X.points, centers)
    return InducedPartition(labels, d2, centers.shape[0])
