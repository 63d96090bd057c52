"""Exhaustive small-multiset search for fuzzy K-means at desk scale.

Every mean of a size-t multiset of input points is a candidate; the best
K-subset of candidates under the weighted fuzzy cost is returned. The work
grows like C(N + t - 1, t) * C(pool, K), so it only runs on tiny inputs and
refuses, with an explicit count, anything beyond the configured budget.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _rng, kernels
from .core import FuzzyParams, InfeasibleError, as_dataset, fm_algorithm, fuzzy_cost_of_means
from .coreset import Coreset, coreset_from_weighted

DEFAULT_BUDGET = 10 ** 7
_BATCH = 1 << 16


@dataclass(frozen=True)
class CandidateMeansPool:
    """Distinct multiset means in first-seen (lexicographic multiset) order."""

    t: int
    candidates: np.ndarray
    n_multisets: int

    def __len__(self) -> int:
        return self.candidates.shape[0]


@dataclass(frozen=True)
class PTASResult:
    means: np.ndarray
    cost: float
    t: int
    pool_size: int
    subsets_evaluated: int
    best_subset: tuple


def multiset_count(n: int, t: int) -> int:
    return math.comb(n + t - 1, t)


def _count_text(n: int) -> str:
    digits = str(n)
    return digits if len(digits) <= 18 else f"{digits[0]}.{digits[1:4]}e{len(digits) - 1}"


def sample_size_t(K: int, epsilon: float) -> int:
    return math.ceil(64 * K / epsilon)


def _batches(iterable, width: int):
    it = iter(iterable)
    while True:
        chunk = list(itertools.islice(it, _BATCH))
        if not chunk:
            return
        yield np.array(chunk, dtype=np.int64).reshape(len(chunk), width)


def enumerate_candidates(X, t: int, budget: int = DEFAULT_BUDGET) -> CandidateMeansPool:
    """Means of all size-t multisets of X, deduplicated by exact equality.

    Weights are ignored: the pool depends on point locations only.
    """
    X = as_dataset(X)
    if t < 1:
        raise ValueError("t must be a positive integer")
    count = multiset_count(X.N, t)
    if count > budget:
        raise InfeasibleError(f"enumeration needs {_count_text(count)} multisets of size {t}, budget is {budget}")
    parts = []
    for idx in _batches(itertools.combinations_with_replacement(range(X.N), t), t):
        acc = X.points[idx[:, 0]].copy()
        for col in range(1, t):
            acc += X.points[idx[:, col]]
        parts.append(acc / t + 0.0)  # + 0.0 turns -0.0 into 0.0 so equal means compare equal
    means = np.vstack(parts)
    _, first = np.unique(means, axis=0, return_index=True)
    return CandidateMeansPool(t, means[np.sort(first)], count)


def ptas_search(X, K: int, m: float, epsilon: float, t_override: Optional[int] = None,
                budget: int = DEFAULT_BUDGET) -> PTASResult:
    """Best K-subset of the candidate pool; ties go to the lexicographically smallest subset."""
    X = as_dataset(X)
    if K < 1:
        raise ValueError("K must be positive")
    t = sample_size_t(K, epsilon) if t_override is None else int(t_override)
    pool = enumerate_candidates(X, t, budget)
    n_c = len(pool)
    if n_c <= K:
        means = pool.candidates
        return PTASResult(means, fuzzy_cost_of_means(X, means, m), t, n_c, 1, tuple(range(n_c)))
    n_subsets = math.comb(n_c, K)
    if n_subsets > budget:
        raise InfeasibleError(f"argmin needs {_count_text(n_subsets)} candidate {K}-subsets from a pool of {n_c}, "
                              f"budget is {budget}")
    D2 = kernels.sq_dists(X.points, pool.candidates)
    w = X.weights.astype(np.float64)
    best_cost, best = math.inf, None
    for subsets in _batches(itertools.combinations(range(n_c), K), K):
        costs = kernels.subset_costs(D2, w, subsets, m)
        i = int(np.argmin(costs))  # first minimum: smallest tuple within the batch
        if costs[i] < best_cost:
            best_cost, best = float(costs[i]), tuple(int(v) for v in subsets[i])
    means = pool.candidates[list(best)]
    return PTASResult(means, best_cost, t, n_c, n_subsets, best)


def derandomized_sampling_ptas(X, K: int, m: float, epsilon: float, t_override: Optional[int] = None,
                               budget: int = DEFAULT_BUDGET) -> np.ndarray:
    return ptas_search(X, K, m, epsilon, t_override, budget).means


def ptas_on_coreset(X, params: FuzzyParams, rng_seed: int, t_override: Optional[int] = None,
                    budget: int = DEFAULT_BUDGET) -> tuple[PTASResult, Coreset]:
    """Build a coreset at epsilon/3, then search it at epsilon/3."""
    third = params.epsilon / 3.0
    S = coreset_from_weighted(X, params.with_epsilon(third), rng_seed)
    return ptas_search(S.as_dataset(), params.K, params.m, third, t_override, budget), S


def inaba_concentration_check(P, n: int, trials: int, delta: float, seed: int = 0) -> float:
    """Fraction of trials where the mean of n uniform draws from P lands close to mean(P).

    Close means squared distance at most km(P) / (delta * n * |P|), with km(P)
    the 1-means cost of P around its own centroid.
    """
    P = np.asarray(P, dtype=np.float64)
    if P.ndim == 1:
        P = P.reshape(-1, 1)
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be positive")
    centroid = P.mean(axis=0)
    spread = float(np.sum((P - centroid) ** 2))
    bound = spread / (delta * n * P.shape[0])
    rng = _rng.derive_rng(seed, _rng.EVALUATION)
    hits = 0
    step = max(1, (1 << 20) // max(1, n * P.shape[1]))
    for start in range(0, trials, step):
        rows = min(step, trials - start)
        idx = rng.integers(0, P.shape[0], size=(rows, n))
        dev = P[idx].mean(axis=1) - centroid
        hits += int(np.count_nonzero(np.einsum("ij,ij->i", dev, dev) <= bound))
    return hits / trials


def reference_optimum(X, K: int, m: float, restarts: int = 200, seed: int = 0,
                      refine_tol: float = 1e-10) -> tuple[np.ndarray, float]:
    """Best of many seeded FM runs, each polished to a tight tolerance.

    A heuristic reference, not a certified optimum.
    """
    X = as_dataset(X)
    rng = _rng.derive_rng(seed, _rng.REFERENCE)
    lo, hi = X.points.min(axis=0), X.points.max(axis=0)
    best_M, best_cost = None, math.inf
    for r in range(restarts):
        if r % 2 == 0 and X.N >= K:
            init = X.points[rng.choice(X.N, size=K, replace=False)]
        else:
            init = rng.uniform(lo, hi, size=(K, X.D))
        run = fm_algorithm(X, K, m, init, max_iters=300, tol=1e-9)
        run = fm_algorithm(X, K, m, run.means, max_iters=5000, tol=refine_tol)
        cost = fuzzy_cost_of_means(X, run.means, m)
        if cost < best_cost:
            best_M, best_cost = run.means, cost
    return best_M, best_cost
