"""Tests for accuracy, density MSE, and earth mover's distance.

The closed-form EMD and the explicit transport construction are independent
routes to the same quantity; their agreement is tested here on hand-built
cases and random pairs, and stressed harder in the acceptance suite.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scalarprobe.metrics import (
    aggregate_baseline,
    argmax_bucket,
    brute_force_emd,
    bucket_accuracy,
    density_mse,
    emd,
    sampling_upper_bound,
)
from scalarprobe.scalardata import (
    BASE4_SCHEME,
    BASE10_SCHEME,
    EmpiricalDistribution,
)

K = BASE10_SCHEME.count


def make_dist(pairs, scheme=BASE10_SCHEME, total=10):
    probs = np.zeros(scheme.count)
    for label, mass in pairs:
        probs[label - scheme.min_exp] = mass
    return EmpiricalDistribution(scheme=scheme, probs=probs, total_count=total)


def random_dist(rng, scheme=BASE10_SCHEME):
    probs = rng.dirichlet(np.ones(scheme.count))
    return EmpiricalDistribution(scheme=scheme, probs=probs, total_count=10)


dirichlet_probs = st.lists(
    st.floats(min_value=1e-6, max_value=1.0), min_size=K, max_size=K
).map(lambda raw: np.asarray(raw) / np.sum(raw))


def dist_from_probs(probs):
    return EmpiricalDistribution(scheme=BASE10_SCHEME, probs=probs, total_count=10)


class TestArgmaxBucket:
    def test_returns_label_not_index(self):
        assert argmax_bucket(make_dist([(7, 1.0)])) == 7
        assert argmax_bucket(make_dist([(-2, 1.0)])) == -2

    def test_tie_goes_to_lower_label(self):
        assert argmax_bucket(make_dist([(1, 0.5), (6, 0.5)])) == 1


class TestBucketAccuracy:
    def test_hit_and_miss(self):
        truth = make_dist([(3, 0.6), (8, 0.4)])
        assert bucket_accuracy(make_dist([(3, 1.0)]), truth) == 1
        assert bucket_accuracy(make_dist([(8, 1.0)]), truth) == 0


class TestDensityMse:
    def test_identical_is_zero(self):
        d = make_dist([(2, 0.5), (5, 0.5)])
        assert density_mse(d, d) == 0.0

    def test_point_masses_one_apart(self):
        # two coordinates differ by 1 each: (1 + 1) / 12
        p = make_dist([(0, 1.0)])
        q = make_dist([(1, 1.0)])
        assert density_mse(p, q) == pytest.approx(2.0 / K)

    def test_cdf_variant(self):
        # CDFs of adjacent point masses differ by 1 in exactly one coordinate
        p = make_dist([(0, 1.0)])
        q = make_dist([(1, 1.0)])
        assert density_mse(p, q, cdf=True) == pytest.approx(1.0 / K)

    def test_symmetry(self):
        rng = np.random.default_rng(0)
        p, q = random_dist(rng), random_dist(rng)
        assert density_mse(p, q) == pytest.approx(density_mse(q, p))

    def test_scheme_mismatch_rejected(self):
        p = make_dist([(0, 1.0)])
        q = make_dist([(0, 1.0)], scheme=BASE4_SCHEME)
        with pytest.raises(ValueError):
            density_mse(p, q)


class TestEmdClosedForm:
    def test_identical_is_zero(self):
        d = make_dist([(2, 0.3), (7, 0.7)])
        assert emd(d, d) == 0.0

    def test_point_masses_distance_is_label_gap(self):
        for a, b in [(-2, 9), (0, 1), (3, 3), (5, 2)]:
            p, q = make_dist([(a, 1.0)]), make_dist([(b, 1.0)])
            assert emd(p, q) == pytest.approx(abs(a - b))

    def test_split_mass(self):
        # half the mass moves 4 buckets: 0.5 * 4
        p = make_dist([(0, 1.0)])
        q = make_dist([(0, 0.5), (4, 0.5)])
        assert emd(p, q) == pytest.approx(2.0)

    @given(dirichlet_probs, dirichlet_probs)
    @settings(max_examples=300)
    def test_symmetry(self, pa, pb):
        p, q = dist_from_probs(pa), dist_from_probs(pb)
        assert emd(p, q) == pytest.approx(emd(q, p), abs=1e-12)

    @given(dirichlet_probs, dirichlet_probs, dirichlet_probs)
    @settings(max_examples=300)
    def test_triangle_inequality(self, pa, pb, pc):
        p, q, r = dist_from_probs(pa), dist_from_probs(pb), dist_from_probs(pc)
        assert emd(p, r) <= emd(p, q) + emd(q, r) + 1e-9

    @given(dirichlet_probs, dirichlet_probs)
    @settings(max_examples=300)
    def test_nonnegative_and_identity(self, pa, pb):
        p, q = dist_from_probs(pa), dist_from_probs(pb)
        d = emd(p, q)
        assert d >= 0.0
        if np.array_equal(pa, pb):
            assert d == 0.0


class TestBruteForceEmd:
    def test_single_flow_case(self):
        p = make_dist([(-2, 1.0)])
        q = make_dist([(9, 1.0)])
        cost, plan = brute_force_emd(p, q)
        assert cost == pytest.approx(11.0)
        assert plan.flows == [(-2, 9, pytest.approx(1.0))]

    def test_equal_inputs_give_empty_plan(self):
        d = make_dist([(1, 0.5), (5, 0.5)])
        cost, plan = brute_force_emd(d, d)
        assert cost == 0.0
        assert plan.flows == []

    def test_plan_cost_matches_returned_cost(self):
        rng = np.random.default_rng(1)
        p, q = random_dist(rng), random_dist(rng)
        cost, plan = brute_force_emd(p, q)
        assert plan.cost() == pytest.approx(cost, abs=1e-12)

    def test_net_marginals_reproduce_difference(self):
        rng = np.random.default_rng(2)
        p, q = random_dist(rng), random_dist(rng)
        _, plan = brute_force_emd(p, q)
        net = plan.net_marginals(BASE10_SCHEME)
        np.testing.assert_allclose(net, p.probs - q.probs, atol=1e-9)

    @given(dirichlet_probs, dirichlet_probs)
    @settings(max_examples=200)
    def test_agrees_with_closed_form(self, pa, pb):
        p, q = dist_from_probs(pa), dist_from_probs(pb)
        cost, _ = brute_force_emd(p, q)
        assert cost == pytest.approx(emd(p, q), abs=1e-12)


class TestAggregateBaseline:
    def test_unweighted_mean_of_distributions(self):
        # totals must not weight the average
        a = make_dist([(0, 1.0)], total=1)
        b = make_dist([(4, 1.0)], total=999)
        m = aggregate_baseline([a, b])
        assert m.probs[0 - (-2)] == pytest.approx(0.5)
        assert m.probs[4 - (-2)] == pytest.approx(0.5)
        assert m.total_count == 1000

    def test_output_is_normalized(self):
        rng = np.random.default_rng(3)
        dists = [random_dist(rng) for _ in range(7)]
        m = aggregate_baseline(dists)
        assert m.probs.sum() == pytest.approx(1.0, abs=1e-12)

    def test_rejects_empty_and_mixed_schemes(self):
        with pytest.raises(ValueError):
            aggregate_baseline([])
        with pytest.raises(ValueError):
            aggregate_baseline([make_dist([(0, 1.0)]),
                                make_dist([(0, 1.0)], scheme=BASE4_SCHEME)])


class TestSamplingUpperBound:
    def test_point_masses_give_one(self):
        dists = [make_dist([(i, 1.0)]) for i in range(-2, 4)]
        assert sampling_upper_bound(dists) == 1.0

    def test_single_split_object(self):
        d = make_dist([(2, 0.6), (7, 0.4)])
        assert sampling_upper_bound([d]) == pytest.approx(0.6)

    def test_mean_of_modal_masses(self):
        dists = [make_dist([(0, 1.0)]), make_dist([(1, 0.5), (3, 0.5)])]
        assert sampling_upper_bound(dists) == pytest.approx(0.75)
