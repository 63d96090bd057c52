import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuzzycoreset.bicriteria import BicriteriaSolution, bicriteria_kmeans, induce_partition
from fuzzycoreset.core import FuzzyParams, WeightedDataset, fuzzy_cost_of_means, kmeans_cost
from fuzzycoreset.coreset import (Coreset, build_rings, chens_sampling, coreset_from_weighted, epsilon_tilde,
                                  fuzzy_coreset, largest_remainder, log_gamma, round_cell_weights,
                                  sample_size_q)
from fuzzycoreset.harness import evaluate_coreset, generate_dataset, planted_mixture


def rings_for(X, centers, alpha=16.0):
    A = BicriteriaSolution(np.asarray(centers, dtype=float), alpha, 2.0, kmeans_cost(X, centers))
    part = induce_partition(X, A)
    return build_rings(X, A, part, alpha), part


# ---------------------------------------------------------------- formulas


def test_epsilon_tilde_examples():
    assert epsilon_tilde(0.5, 1.0, 1, 2.0, 1.0) == 0.5
    assert epsilon_tilde(0.4, 2.0, 2, 2.0, 10.0) == pytest.approx(0.01, rel=1e-15)
    vals = [epsilon_tilde(0.2, 16.0, K, 2.0, 1.0) for K in range(1, 6)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_log_gamma_plug_in():
    # K = beta = 1, m = 2, eps = 0.8 -> (eps / 8)^2 = 0.01; eps_tilde = 0.5 -> inner argument
    # b * alpha * N / (0.25 * 0.01) equals 1 for b = 0.0025, so the bracket is 1; c / eps_tilde = e
    lg = log_gamma(1.0, 1.0, 1, 2.0, 1, 1, 0.8, 0.5, 0.0025, 0.5 * math.e)
    assert lg == pytest.approx(1.0, abs=1e-12)


def test_log_gamma_shape():
    args = dict(alpha=16.0, beta=2.0, K=3, m=2.0, epsilon=0.2, eps_tilde=0.01, const_b=4.0, const_c=4.0)
    base = log_gamma(N=1000, D=2, **args)
    assert log_gamma(N=1000, D=4, **args) - base == pytest.approx(2 * math.log(4.0 / 0.01), rel=1e-12)
    seq = [log_gamma(N=n, D=2, **args) for n in (10, 100, 1000, 10 ** 6)]
    assert all(a < b for a, b in zip(seq, seq[1:]))


def test_log_gamma_errors():
    with pytest.raises(ValueError):
        log_gamma(1.0, 1.0, 1, 2.0, 1, 1, 0.8, 0.5, 0.001, 0.5 * math.e)  # inner argument below 1
    with pytest.raises(ValueError):
        log_gamma(16.0, 2.0, 2, 2.0, 100, 2, 0.2, 5.0, 4.0, 4.0)  # eps_tilde >= c


def test_sample_size_q_examples():
    # every factor 1 and ln(4 * 1 * 1 * 1 / 4) + 1 * 1 = 1
    assert sample_size_q(1.0, 1.0, 1, 2.0, 1.0, 4.0, 1, 1.0, 1.0) == 1
    # (2 * 2 / 0.5)^2 = 64 times a log term of 0 + 2 * 5 = 10
    assert sample_size_q(2.0, 1.0, 2, 2.0, 0.5, 8.0, 1, 5.0, 1.0) == 640
    lead1 = sample_size_q(2.0, 1.0, 2, 2.0, 0.1, 8.0, 1, 5.0, 1.0)
    lead4 = sample_size_q(2.0, 1.0, 2, 2.0, 0.4, 8.0, 1, 5.0, 1.0)
    assert lead1 == 16 * lead4
    assert sample_size_q(1.0, 1.0, 1, 2.0, 1.0, 0.1, 1, 0.0, 1e-9) == 1


# ---------------------------------------------------------------- rings


def test_rings_worked_example():
    X = WeightedDataset.unweighted([0.0, 1.0, 4.0])
    rings, _ = rings_for(X, [[0.0]], alpha=1.0)
    assert rings.base_radius == pytest.approx(math.sqrt(17.0 / 3.0), rel=1e-15)
    assert rings.max_ring == 1
    assert rings.cells[(0, 0)].tolist() == [0, 1]
    assert rings.cells[(0, 1)].tolist() == [2]


def test_rings_all_on_center():
    X = WeightedDataset.unweighted(np.zeros((5, 2)))
    rings, _ = rings_for(X, [[0.0, 0.0]])
    assert rings.base_radius == 0.0 and list(rings.cells) == [(0, 0)]


def test_rings_boundary_is_inclusive():
    # R^2 = km / (alpha N) = (0 + 1 + 4 + 16) / (1 * 4)... choose data so d = 2R exactly
    X = WeightedDataset.unweighted([0.0, 1.0, 1.0, 2.0])  # km around 0 = 6, alpha N = 4 * 1.5
    rings, _ = rings_for(X, [[0.0]], alpha=1.5)
    assert rings.base_radius == 1.0
    assert rings.ring.tolist() == [0, 0, 0, 1]


@pytest.mark.parametrize("seed", range(5))
def test_rings_partition_and_radii(seed):
    rng = np.random.default_rng(seed)
    X = WeightedDataset.unweighted(rng.standard_t(2, size=(2000, 3)))
    A = bicriteria_kmeans(X, 3, 0.1, seed)
    part = induce_partition(X, A)
    rings = build_rings(X, A, part, A.alpha)
    idx = np.sort(np.concatenate(list(rings.cells.values())))
    np.testing.assert_array_equal(idx, np.arange(X.N))
    assert rings.max_ring == math.ceil(0.5 * math.log2(A.alpha * X.N))
    d = np.sqrt(((X.points - A.centers[part.assignment]) ** 2).sum(axis=1))
    for (k, j), members in rings.cells.items():
        assert np.all(part.assignment[members] == k)
        assert 0 <= j <= rings.max_ring
        if j == 0:
            assert np.all(d[members] <= rings.base_radius * (1 + 1e-12))
        else:
            assert np.all(d[members] > 2.0 ** (j - 1) * rings.base_radius * (1 - 1e-12))
            assert np.all(d[members] <= 2.0 ** j * rings.base_radius * (1 + 1e-12))


def test_F_grows_by_one_per_quadrupling():
    Fs = [math.ceil(0.5 * math.log2(16.0 * n)) for n in (1000, 2000, 4000, 8000)]
    X = [WeightedDataset.unweighted(np.random.default_rng(0).normal(size=(n, 1))) for n in (1000, 2000, 4000, 8000)]
    got = [rings_for(x, [[0.0]])[0].max_ring for x in X]
    assert got == Fs
    assert got[2] - got[0] == 1


# ---------------------------------------------------------------- rounding


def test_round_examples():
    assert round_cell_weights([Fraction(5, 2), Fraction(5, 2)]) == [3, 2]
    assert round_cell_weights([5]) == [5]
    assert round_cell_weights([]) == []
    with pytest.raises(ValueError):
        round_cell_weights([Fraction(1, 3)])


def test_largest_remainder_lifts_zeros():
    # raw (0.25, 0.25, 3.5): floors (0, 0, 3), deficit 1 to the largest remainder, zeros lifted
    out = largest_remainder([1, 1, 14], 4)
    assert out.tolist() == [1, 1, 2]


@settings(max_examples=1000, deadline=None)
@given(st.lists(st.integers(1, 50), min_size=1, max_size=12), st.integers(1, 40))
def test_round_conserves(counts, q):
    total = sum(counts) * 7  # cell mass T; raw weight of an entry drawn c times is c * T / sum(c)
    raw = [Fraction(c * total, sum(counts)) for c in counts]
    out = round_cell_weights(raw)
    assert sum(out) == total
    assert all(abs(o - r) < 1 for o, r in zip(out, raw)) or min(out) >= 1
    assert all(o >= 1 for o in out)


# ---------------------------------------------------------------- sampling


def test_single_point_cell_gets_cell_mass():
    X = WeightedDataset([[0.0], [10.0], [10.5], [11.0]], [7, 1, 1, 1])
    rings, _ = rings_for(X, [[0.0], [10.5]])
    S = chens_sampling(X, 2, rings, 2, 0)
    assert S.weights[S.indices.tolist().index(0)] == 7
    assert S.weights.sum() == X.total_weight


def test_sampling_bounds_and_determinism(rng):
    X = WeightedDataset.unweighted(rng.normal(size=(5000, 2)))
    A = bicriteria_kmeans(X, 3, 0.1, 0)
    rings = build_rings(X, A, induce_partition(X, A), A.alpha)
    S1 = chens_sampling(X, 3, rings, 10, 99)
    S2 = chens_sampling(X, 3, rings, 10, 99)
    assert S1 == S2
    assert len(S1) <= rings.n_cells * 10
    assert len(np.unique(S1.indices)) == len(S1)
    assert np.all(np.diff(S1.indices) > 0)
    assert S1.weights.sum() == X.N
    np.testing.assert_array_equal(S1.points, X.points[S1.indices])
    for idx in rings.cells.values():
        inside = np.isin(S1.indices, idx)
        assert S1.weights[inside].sum() == len(idx)


def test_cell_cap_keeps_everything(rng):
    X = WeightedDataset(rng.normal(size=(50, 2)), rng.integers(1, 5, size=50))
    S = fuzzy_coreset(X.expand(), FuzzyParams(K=2), 0)
    assert len(S) == X.expand().N  # q with default constants is astronomically large
    M = rng.normal(size=(2, 2))
    assert fuzzy_cost_of_means(S.as_dataset(), M, 2.0) == fuzzy_cost_of_means(X.expand(), M, 2.0)


def test_degenerate_zero_cost_collapses_duplicates():
    X = WeightedDataset([[1.0], [1.0], [2.0], [2.0], [2.0]], [1, 2, 1, 1, 1])
    S = coreset_from_weighted(X, FuzzyParams(K=2), 0)
    assert S.indices.tolist() == [0, 2] and S.weights.tolist() == [3, 3]


def test_fuzzy_coreset_rejects_weights():
    with pytest.raises(ValueError):
        fuzzy_coreset(WeightedDataset([[0.0], [1.0]], [1, 2]), FuzzyParams(K=1), 0)


def test_coreset_invariants():
    with pytest.raises(ValueError):
        Coreset(np.zeros((2, 1)), [1, 1], 3, [0, 1])
    assert len(Coreset.empty(3)) == 0


def test_build_info_recorded(rng):
    X = rng.normal(size=(3000, 2))
    S = fuzzy_coreset(X, FuzzyParams.preset("compact", K=2), 5)
    info = S.info
    p = FuzzyParams.preset("compact", K=2)
    assert info.epsilon_tilde == epsilon_tilde(0.2, 16.0, 2, 2.0, p.const_a)
    assert info.draws_per_cell == sample_size_q(16.0, 2.0, 2, 2.0, info.epsilon_tilde, p.delta / 3, info.max_ring, info.log_gamma, p.const_q)
    assert len(S) <= info.n_cells * info.draws_per_cell


def test_weighted_and_expanded_both_track_cost():
    X = generate_dataset(planted_mixture(2, 2, 3000, 1), 1)
    rng = np.random.default_rng(0)
    W = WeightedDataset(X.points, rng.integers(1, 4, size=X.N))
    p = FuzzyParams.preset("compact", K=2)
    Sw = coreset_from_weighted(W, p, 3)
    Se = fuzzy_coreset(W.expand(), p, 3)
    assert Sw.weights.sum() == Se.weights.sum() == W.total_weight
    for S in (Sw, Se):
        rep = evaluate_coreset(W, S, p, 100, "non-negligible", 4)
        assert rep.summary["phi_pass_fraction"] >= 0.95
