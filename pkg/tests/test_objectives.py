import math
import random
import threading

import numpy as np
import pytest

from substream.errors import ParameterError, UnknownElementError
from substream.objectives import (
    ModularObjective,
    build_coverage,
    build_movie_objective,
    marginal_gain,
    property_check,
)

from conftest import SupermodularFixture, random_coverage_oracle, random_mixture_oracle


class TestCoverage:
    def test_star_root_covers_everything(self, star_oracle):
        assert star_oracle.eval({0}) == 6.0

    def test_star_leaf_covers_itself(self, star_oracle):
        assert star_oracle.eval({1}) == 1.0

    def test_disjoint_edges(self):
        oracle = build_coverage([(0, 1), (2, 3)])
        assert oracle.eval({0, 2}) == 4.0

    def test_marginal_gain_hand_enumerated(self):
        # covered({1}) = {1}; covered({0,1}) = {0,1,2}; gain = 2
        oracle = build_coverage([(0, 1), (0, 2)])
        assert marginal_gain(oracle, 0, {1}) == 2.0

    def test_gain_of_member_is_zero(self, star_oracle):
        assert marginal_gain(star_oracle, 1, {0, 1}) == 0.0

    def test_undirected_mirrors_edges(self):
        oracle = build_coverage([(0, 1)], directed=False)
        assert oracle.eval({1}) == 2.0

    def test_isolated_nodes_join_ground_set(self):
        oracle = build_coverage([(0, 1)], isolated_nodes=[7])
        assert 7 in oracle.ground_set
        assert oracle.eval({7}) == 1.0

    def test_value_bounded_by_ground_size(self, rng):
        oracle = random_coverage_oracle(rng, 9)
        for _ in range(50):
            subset = {e for e in oracle.ground_set if rng.random() < 0.5}
            assert oracle.eval(subset) <= oracle.ground_size

    def test_unknown_element_rejected(self, star_oracle):
        with pytest.raises(UnknownElementError):
            star_oracle.eval({0, 99})
        with pytest.raises(UnknownElementError):
            marginal_gain(star_oracle, 99, set())


class TestModular:
    def test_weights_add_up(self):
        oracle = ModularObjective({1: 3.0, 2: 2.0})
        assert marginal_gain(oracle, 1, set()) == 3.0
        assert oracle.eval({1, 2}) == 5.0

    def test_negative_weight_rejected(self):
        with pytest.raises(ParameterError):
            ModularObjective({1: -0.5})


class TestMovie:
    def test_pure_modular_term(self):
        oracle = build_movie_objective([2.0], {1: [1.0], 2: [3.0]}, alpha=0.0)
        assert oracle.eval({2}) == pytest.approx(6.0)

    def test_mixed_terms_hand_evaluated(self):
        # f({1}) = 0.5*2 + 0.5*(1 + 3) = 3.0
        oracle = build_movie_objective([2.0], {1: [1.0], 2: [3.0]}, alpha=0.5)
        assert oracle.eval({1}) == pytest.approx(3.0)

    def test_empty_set_is_zero_for_any_alpha(self):
        for alpha in (0.0, 0.5, 1.0):
            oracle = build_movie_objective([2.0], {1: [1.0], 2: [3.0]}, alpha=alpha)
            assert oracle.eval(set()) == 0.0

    def test_negative_similarity_clamped(self):
        oracle = build_movie_objective([1.0], {1: [-5.0], 2: [1.0]}, alpha=0.5)
        # s(u,1) clamps to 0; facility column for movie 1 clamps to 0 as well
        assert oracle.eval({1}) == pytest.approx(0.5 * max(0.0, -5.0 * 1.0) + 0.5 * 25.0)
        report = property_check(oracle, trials=300, seed=3)
        assert report.clean

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ParameterError):
            build_movie_objective([1.0, 2.0], {1: [1.0]}, alpha=0.5)

    def test_alpha_out_of_range_rejected(self):
        with pytest.raises(ParameterError):
            build_movie_objective([1.0], {1: [1.0]}, alpha=1.5)

    def test_precompute_matches_direct(self):
        rng = np.random.default_rng(5)
        vecs = {i: rng.normal(0.2, 0.4, size=4) for i in range(12)}
        user = rng.normal(0.2, 0.4, size=4)
        fast = build_movie_objective(user, vecs, alpha=0.7, precompute=True)
        slow = build_movie_objective(user, vecs, alpha=0.7, precompute=False)
        sample = random.Random(1)
        for _ in range(40):
            z = {e for e in range(12) if sample.random() < 0.4}
            assert fast.eval(z) == pytest.approx(slow.eval(z), rel=1e-12)


class TestCallCounting:
    def test_counter_tracks_every_eval(self, star_oracle):
        assert star_oracle.calls == 0
        star_oracle.eval({0})
        star_oracle.eval(set())
        marginal_gain(star_oracle, 1, {0})  # two evals
        assert star_oracle.calls == 4

    def test_counter_merges_across_threads(self):
        oracle = ModularObjective({i: 1.0 for i in range(10)})
        per_thread = 500

        def worker():
            for _ in range(per_thread):
                oracle.eval({1, 2})

        threads = [threading.Thread(target=worker) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert oracle.calls == 8 * per_thread


class TestNormalizationAndStructure:
    def test_empty_set_evaluates_to_zero(self, rng):
        oracles = [
            random_coverage_oracle(rng, 8),
            random_mixture_oracle(rng, 8),
            ModularObjective({1: 2.0}),
        ]
        for oracle in oracles:
            assert oracle.eval(set()) == 0.0

    def test_property_check_clean_on_coverage(self, rng):
        oracle = random_coverage_oracle(rng, 10)
        report = property_check(oracle, trials=1000, seed=7)
        assert report.clean, report.examples

    def test_property_check_clean_on_modular(self):
        oracle = ModularObjective({i: float(i % 5) for i in range(12)})
        report = property_check(oracle, trials=500, seed=11)
        assert report.clean

    def test_property_check_clean_on_mixture(self, rng):
        oracle = random_mixture_oracle(rng, 9)
        report = property_check(oracle, trials=800, seed=13)
        assert report.clean

    def test_property_check_flags_supermodular(self):
        oracle = SupermodularFixture(range(8))
        report = property_check(oracle, trials=400, seed=17)
        assert report.diminishing_violations > 0

    def test_sampled_monotone_gains_shrink(self, rng):
        oracle = random_coverage_oracle(rng, 9)
        ids = sorted(oracle.ground_set)
        for _ in range(200):
            y = {e for e in ids if rng.random() < 0.6}
            x = {e for e in y if rng.random() < 0.6}
            outside = [e for e in ids if e not in y]
            assert oracle.eval(x) <= oracle.eval(y)
            if outside:
                e = rng.choice(outside)
                assert marginal_gain(oracle, e, x) >= marginal_gain(oracle, e, y)

    def test_exhaustive_removal_bound_small_coverage(self, rng):
        # every (A, B, R) triple on a 6-node graph
        oracle = random_coverage_oracle(rng, 6, density=0.4)
        ids = sorted(oracle.ground_set)
        n = len(ids)
        subsets = [
            {ids[i] for i in range(n) if mask >> i & 1} for mask in range(2**n)
        ]
        small = random.Random(23)
        for _ in range(1500):
            a = small.choice(subsets)
            b = small.choice(subsets)
            r = small.choice(subsets)
            lhs = oracle.eval(a | b) - oracle.eval(a | (b - r))
            rhs = oracle.eval(a | r) - oracle.eval(a)
            assert lhs <= rhs + 1e-9
