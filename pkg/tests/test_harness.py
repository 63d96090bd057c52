import numpy as np
import pytest

from fuzzycoreset.bicriteria import bicriteria_kmeans
from fuzzycoreset.core import FuzzyParams, WeightedDataset, is_negligible, kmeans_cost, optimal_memberships
from fuzzycoreset.coreset import Coreset, fuzzy_coreset
from fuzzycoreset.harness import (RATIO_COLUMNS, TrialReport, evaluate_coreset, generate_dataset, planted_mixture,
                                  sample_solution)


def test_single_point_component():
    X = generate_dataset({"dim": 2, "components": [{"mean": [3.0, 4.0], "scale": 0.0, "count": 1}]}, 0)
    np.testing.assert_array_equal(X.points, [[3.0, 4.0]])


def test_counts_and_determinism():
    mixture = planted_mixture(3, 4, 1001, seed=2)
    X = generate_dataset(mixture, 7)
    assert X.N == 1001 and X.D == 4 and np.all(X.weights == 1)
    np.testing.assert_array_equal(X.points, generate_dataset(mixture, 7).points)
    assert not np.array_equal(X.points, generate_dataset(mixture, 8).points)


def test_pareto_tail_is_heavier():
    g = generate_dataset(planted_mixture(1, 2, 20000, 0, tail="gaussian"), 0).points
    p = generate_dataset(planted_mixture(1, 2, 20000, 0, tail="pareto"), 0).points
    mg, mp = g.mean(axis=0), p.mean(axis=0)
    assert np.abs(p - mp).max() > 10 * np.abs(g - mg).max()


@pytest.mark.parametrize("mixture", [
    {},
    {"components": []},
    {"dim": 2, "components": [{"mean": [0.0], "count": 3}]},
    {"dim": 1, "components": [{"mean": [0.0], "count": -1}]},
    {"dim": 1, "components": [{"mean": [0.0], "count": 3, "tail": "cauchy"}]},
    {"dim": 1, "components": [{"mean": [0.0], "count": 0}]},
])
def test_invalid_mixtures(mixture):
    with pytest.raises((ValueError, KeyError)):
        generate_dataset(mixture, 0)


def test_separated_components_cheap_for_bicriteria():
    mixture = {"dim": 1, "components": [{"mean": [0.0], "scale": 1.0, "count": 500},
                                      {"mean": [1000.0], "scale": 1.0, "count": 500}]}
    X = generate_dataset(mixture, 0)
    A = bicriteria_kmeans(X, 2, 0.1, 0)
    assert A.cost < 1e-3 * kmeans_cost(X, X.points.mean(axis=0, keepdims=True))


def test_identity_coreset_ratios_exactly_one():
    X = generate_dataset(planted_mixture(3, 2, 500, 1), 1)
    S = Coreset.from_dataset(X)
    for mode in ("non-negligible", "unrestricted"):
        rep = evaluate_coreset(X, S, FuzzyParams(K=3), 50, mode, 0)
        assert all(r[4] == 1.0 and r[7] == 1.0 for r in rep.ratios)
        assert rep.summary["phi_pass_fraction"] == 1.0


def test_rejects_bad_requests():
    X = generate_dataset(planted_mixture(2, 2, 100, 1), 1)
    with pytest.raises(ValueError):
        evaluate_coreset(X, X, FuzzyParams(K=2), 0)
    with pytest.raises(ValueError):
        evaluate_coreset(X, X, FuzzyParams(K=2), 5, mode="bogus")


def test_non_negligible_sampler():
    X = generate_dataset(planted_mixture(3, 2, 400, 3), 3)
    p = FuzzyParams(K=3)
    lo, hi = X.points.min(axis=0), X.points.max(axis=0)
    for i in range(50):
        M = sample_solution(X, p, "non-negligible", 9, i)
        assert 1 <= M.shape[0] <= 3
        assert np.all((M >= lo) & (M <= hi))
        r = optimal_memberships(X, M, 2.0)
        assert not any(is_negligible(r, k, 3, p.epsilon, 2.0) for k in range(M.shape[0]))


def test_unrestricted_sampler_reaches_outside_box():
    X = generate_dataset(planted_mixture(2, 2, 400, 3), 3)
    lo, hi = X.points.min(axis=0), X.points.max(axis=0)
    Ms = np.vstack([sample_solution(X, FuzzyParams(K=2), "unrestricted", 1, i) for i in range(100)])
    assert np.any((Ms < lo) | (Ms > hi))


def test_report_roundtrip_and_determinism():
    X = generate_dataset(planted_mixture(2, 2, 2000, 4), 4)
    p = FuzzyParams.preset("compact", K=2)
    S = fuzzy_coreset(X, p, 0)
    a = evaluate_coreset(X, S, p, 30, "non-negligible", 5)
    b = evaluate_coreset(X, S, p, 30, "non-negligible", 5)
    assert a.format() == b.format()
    back = TrialReport.parse(a.format())
    assert back.config == a.config and back.summary == a.summary
    assert [tuple(r) for r in back.ratios] == [tuple(r) for r in a.ratios]
    assert 0.0 <= a.summary["phi_pass_fraction"] <= 1.0
    assert all(r[4] > 0 for r in a.ratios)
    assert "[timings]" not in a.format() and "[timings]" in a.format(include_timings=True)
    assert a.format().splitlines()[-31] == ",".join(RATIO_COLUMNS)


def test_report_is_recomputable():
    X = generate_dataset(planted_mixture(2, 2, 800, 4), 4)
    p = FuzzyParams.preset("compact", K=2)
    S = fuzzy_coreset(X, p, 0)
    rep = evaluate_coreset(X, S, p, 10, "unrestricted", 6)
    from fuzzycoreset.core import fuzzy_cost_of_means
    for row in rep.ratios:
        M = sample_solution(X, p, "unrestricted", 6, row[0])
        assert row[2] == fuzzy_cost_of_means(X, M, 2.0)
        assert row[3] == fuzzy_cost_of_means(S.as_dataset(), M, 2.0)


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        TrialReport.parse("hello")
