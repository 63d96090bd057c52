"""Ring-sampling coresets for fuzzy K-means.

Construction: a bicriteria solution A cuts X into nearest-center cells, each
cell is sliced into dyadic rings around its center, and every ring is
represented by q uniform draws (with replacement) carrying weight
|ring| / q apiece. Weights are then rounded to integers per ring without
changing the ring total.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import _rng
from .bicriteria import BicriteriaSolution, InducedPartition, bicriteria_kmeans, induce_partition
from .core import FuzzyParams, WeightedDataset, as_dataset


@dataclass(frozen=True)
class RingPartition:
    max_ring: int
    base_radius: float
    cells: dict
    center: np.ndarray
    ring: np.ndarray

    @property
    def n_cells(self) -> int:
        return len(self.cells)


@dataclass(frozen=True)
class BuildInfo:
    n_centers: int
    bicriteria_cost: float
    max_ring: int
    base_radius: float
    epsilon_tilde: float
    log_gamma: float
    draws_per_cell: int
    n_cells: int


@dataclass(frozen=True, eq=False)
class Coreset:
    """Weighted subset of a source dataset. ``indices`` point back into the source."""

    points: np.ndarray
    weights: np.ndarray
    source_total: int
    indices: np.ndarray
    info: Optional[BuildInfo] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "points", np.ascontiguousarray(self.points, dtype=np.float64))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.int64))
        object.__setattr__(self, "indices", np.asarray(self.indices, dtype=np.int64))
        object.__setattr__(self, "source_total", int(self.source_total))
        if int(self.weights.sum()) != self.source_total:
            raise ValueError("coreset weights must sum to the source total")

    @classmethod
    def empty(cls, D: int) -> "Coreset":
        return cls(np.empty((0, D)), np.empty(0, dtype=np.int64), 0, np.empty(0, dtype=np.int64))

    @classmethod
    def from_dataset(cls, X: WeightedDataset, indices=None) -> "Coreset":
        idx = np.arange(X.N) if indices is None else indices
        return cls(X.points, X.weights, X.total_weight, idx)

    def __len__(self) -> int:
        return self.points.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Coreset):
            return NotImplemented
        return (self.source_total == other.source_total and np.array_equal(self.points, other.points)
                and np.array_equal(self.weights, other.weights) and np.array_equal(self.indices, other.indices))

    __hash__ = None

    @property
    def D(self) -> int:
        return self.points.shape[1]

    def as_dataset(self) -> WeightedDataset:
        return WeightedDataset(self.points, self.weights)


def build_rings(X, A: BicriteriaSolution, partition: InducedPartition, alpha: float) -> RingPartition:
    """Slice each bicriteria cell into the ball of radius R and dyadic annuli.

    A point at distance d from its center lands in ring
    j = max(0, ceil(log2(d / R))), i.e. 2^(j-1) R < d <= 2^j R.
    """
    X = as_dataset(X)
    W = X.total_weight
    d2 = partition.sq_dist
    km = float(np.sum(X.weights * d2))
    F = max(0, math.ceil(0.5 * math.log2(alpha * W)))
    if km <= 0.0:
        ring = np.zeros(X.N, dtype=np.int64)
        return RingPartition(F, 0.0, _group(partition.assignment, ring, F), partition.assignment, ring)
    R2 = km / (alpha * W)
    with np.errstate(divide="ignore"):
        j = np.ceil(0.5 * np.log2(d2 / R2))
    j = np.clip(np.nan_to_num(j, neginf=0.0), 0, F).astype(np.int64)
    # exact fix-up: scaling by 4^j is exact in binary floating point
    for _ in range(4):
        up = (d2 > R2 * 4.0 ** j) & (j < F)
        down = (j > 0) & (d2 <= R2 * 4.0 ** (j - 1))
        if not (up.any() or down.any()):
            break
        j = j + up - down
    return RingPartition(F, math.sqrt(R2), _group(partition.assignment, j, F), partition.assignment, j)


def _group(center, ring, F) -> dict:
    key = center * (F + 1) + ring
    order = np.argsort(key, kind="stable")
    uniq, starts = np.unique(key[order], return_index=True)
    ends = np.append(starts[1:], len(order))
    return {(int(u // (F + 1)), int(u % (F + 1))): order[s:e] for u, s, e in zip(uniq, starts, ends)}


def epsilon_tilde(epsilon: float, alpha: float, K: int, m: float, const_a: float) -> float:
    return epsilon / (const_a * alpha * K ** (m - 1.0))


def log_gamma(alpha, beta, K, m, N, D, epsilon, eps_tilde, const_b, const_c) -> float:
    """Natural log of the solution-grid size gamma (gamma itself overflows for moderate D)."""
    if eps_tilde >= const_c:
        raise ValueError("eps_tilde must be smaller than const_c")
    log2_arg = (math.log2(const_b * alpha * N) - 2.0 * math.log2(eps_tilde)
                - m * math.log2(epsilon / (4.0 * m * K * K)))
    if log2_arg < -1e-12:  # an argument of exactly 1 may land a few ulps low
        raise ValueError("inconsistent constants: the inner logarithm of gamma is negative")
    log2_arg = max(log2_arg, 0.0)
    return math.log(beta * K) + math.log(0.5 * log2_arg + 1.0) + D * math.log(const_c / eps_tilde)


def sample_size_q(alpha, beta, K, m, epsilon_run, delta, F, log_gamma, const_q) -> int:
    """Draws per ring: q (alpha K^(m-1) / eps)^2 ln(4 beta K F gamma^K / delta), at least 1."""
    lead = const_q * (alpha * K ** (m - 1.0) / epsilon_run) ** 2
    ln_term = math.log(4.0 * beta * K * max(F, 1) / delta) + K * log_gamma
    x = lead * ln_term
    if not math.isfinite(x):
        raise OverflowError("sample size is not finite")
    # absorb rounding noise so that exact products are not bumped up by one
    return max(1, math.ceil(x * (1.0 - 1e-12)))


def largest_remainder(numerators, denominator: int) -> np.ndarray:
    """Round numerators/denominator to integers preserving their (integer) sum.

    Floors first, then hands the deficit to the largest remainders (ties to
    the lowest index). Entries that would round to zero are lifted to one by
    taking a unit from the largest entry, when the total allows it.
    """
    den = int(denominator)
    num = [int(v) for v in numerators]
    total, rem_total = divmod(sum(num), den)
    if rem_total:
        raise ValueError("raw weights must sum to an integer")
    floor = np.array([v // den for v in num], dtype=np.int64)
    rem = np.array([v % den for v in num], dtype=np.int64)
    deficit = total - int(floor.sum())
    if deficit:
        order = np.lexsort((np.arange(len(rem)), -rem))
        floor[order[:deficit]] += 1
    if total >= len(floor):
        positive = np.array([v > 0 for v in num], dtype=bool)
        while True:
            zeros = np.flatnonzero((floor == 0) & positive)
            if len(zeros) == 0:
                break
            floor[int(np.argmax(floor))] -= 1
            floor[zeros[0]] += 1
    return floor


def round_cell_weights(raw) -> list[int]:
    """Integer weights within one of each rational raw weight, same exact total."""
    fr = [Fraction(v) for v in raw]
    if not fr:
        return []
    den = math.lcm(*(f.denominator for f in fr))
    return [int(v) for v in largest_remainder([f.numerator * (den // f.denominator) for f in fr], den)]


def _sample_cell(idx, weights, q, rng):
    n = len(idx)
    w = weights[idx]
    W = int(w.sum())
    if q >= n:
        return idx, w
    if np.all(w == w[0]):
        draws = rng.integers(0, n, size=q)
    else:
        cum = np.cumsum(w)
        draws = np.searchsorted(cum, rng.random(q) * W, side="right")
        draws = np.minimum(draws, n - 1)
    counts = np.bincount(draws, minlength=n)
    hit = np.flatnonzero(counts)
    return idx[hit], largest_remainder([int(c) * W for c in counts[hit]], q)


def chens_sampling(X, K: int, rings: RingPartition, q: int, rng_seed: int) -> Coreset:
    """Draw q points per non-empty ring cell; a cell with at most q entries is kept whole.

    Cells use independent streams keyed by (seed, k, j). Weighted inputs are
    sampled proportionally to weight and carry the cell's total weight.
    """
    X = as_dataset(X)
    keep, wts = [], []
    for (k, j), idx in rings.cells.items():
        rng = _rng.derive_rng(rng_seed, _rng.SAMPLING, k, j)
        sel, w = _sample_cell(idx, X.weights, q, rng)
        keep.append(sel)
        wts.append(w)
    sel = np.concatenate(keep)
    w = np.concatenate(wts)
    order = np.argsort(sel, kind="stable")
    sel, w = sel[order], w[order]
    return Coreset(X.points[sel], w, X.total_weight, sel)


def _collapse_duplicates(X: WeightedDataset) -> Coreset:
    _, first, inverse = np.unique(X.points, axis=0, return_index=True, return_inverse=True)
    mass = np.bincount(inverse.ravel(), weights=X.weights, minlength=len(first)).astype(np.int64)
    order = np.argsort(first)
    sel = first[order]
    return Coreset(X.points[sel], mass[order], X.total_weight, sel)


def coreset_from_weighted(X, params: FuzzyParams, rng_seed: int) -> Coreset:
    """Coreset of an integer-weighted dataset; N in every formula becomes w(X)."""
    X = as_dataset(X)
    p = params
    A = bicriteria_kmeans(X, p.K, p.delta / 3.0, rng_seed, p.alpha, p.beta)
    part = induce_partition(X, A)
    rings = build_rings(X, A, part, p.alpha)
    W = X.total_weight
    eps_t = epsilon_tilde(p.epsilon, p.alpha, p.K, p.m, p.const_a)
    lg = log_gamma(p.alpha, p.beta, p.K, p.m, W, X.D, p.epsilon, eps_t, p.const_b, p.const_c)
    q = sample_size_q(p.alpha, p.beta, p.K, p.m, eps_t, p.delta / 3.0, rings.max_ring, lg, p.const_q)
    info = BuildInfo(A.size, A.cost, rings.max_ring, rings.base_radius, eps_t, lg, q, rings.n_cells)
    if rings.base_radius == 0.0:
        out = _collapse_duplicates(X)
    else:
        out = chens_sampling(X, p.K, rings, q, rng_seed)
    return Coreset(out.points, out.weights, out.source_total, out.indices, info)


def fuzzy_coreset(X, params: FuzzyParams, rng_seed: int) -> Coreset:
    """Coreset of an unweighted point set (weights, if given, must all be 1)."""
    X = as_dataset(X)
    if np.any(X.weights != 1):
        raise ValueError("fuzzy_coreset expects unit weights; use coreset_from_weighted")
    return coreset_from_weighted(X, params, rng_seed)
