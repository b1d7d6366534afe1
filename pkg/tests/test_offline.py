import math
import random

import numpy as np
import pytest

import matchlab as ml
from matchlab.errors import CapabilityError, UndefinedRatioError, ValidationError


class TestMaxMatching:
    def test_empty(self):
        size, pairs = ml.max_matching([], 3, 3)
        assert size == 0 and pairs == ()

    def test_three_edge_path(self):
        size, pairs = ml.max_matching([(0, 0), (1, 0), (1, 1)], 2, 2)
        assert size == 2
        assert len(pairs) == 2

    def test_complete_realized(self):
        edges = [(i, j) for i in range(3) for j in range(3)]
        size, _ = ml.max_matching(edges, 3, 3)
        assert size == 3

    def test_returned_matching_is_valid(self):
        rng = random.Random(5)
        edges = [(rng.randrange(5), rng.randrange(5)) for _ in range(12)]
        size, pairs = ml.max_matching(edges, 5, 5)
        assert len(pairs) == size
        assert len({u for u, _ in pairs}) == size
        assert len({v for _, v in pairs}) == size
        assert all(pair in edges for pair in pairs)

    def test_matches_exhaustive_search(self):
        rng = random.Random(99)
        for _ in range(60):
            m = rng.randint(0, 10)
            n_l, n_r = rng.randint(1, 5), rng.randint(1, 5)
            edges = [(rng.randrange(n_l), rng.randrange(n_r)) for _ in range(m)]
            size, _ = ml.max_matching(edges, n_l, n_r)
            assert size == ml.max_matching_bruteforce(edges, n_l, n_r)

    def test_out_of_range_edge(self):
        with pytest.raises(ValidationError):
            ml.max_matching([(0, 9)], 2, 2)


class TestMcOpt:
    def test_all_zero(self):
        g = ml.gen_random(3, 3, 6, 0.0, 0.0, seed=1)
        est = ml.mc_opt(g, 2000, seed=1)
        assert est.mean == 0.0

    def test_deterministic(self):
        g = ml.gen_random(4, 4, 10, 0.2, 0.8, seed=2)
        a = ml.mc_opt(g, 30_000, seed=9, threads=1)
        b = ml.mc_opt(g, 30_000, seed=9, threads=3)
        assert a.mean == b.mean and a.stderr == b.stderr

    def test_converges_to_exact(self):
        g = ml.gen_random(3, 4, 10, 0.1, 0.9, seed=3)
        exact = ml.exact_expected_opt(g)
        est = ml.mc_opt(g, 200_000, seed=17)
        assert abs(est.mean - exact) <= 3 * est.stderr + 1e-9

    def test_use_pruned_flag(self):
        g = ml.gen_random(3, 3, 8, 0.3, 0.9, seed=4)
        pg = ml.prune(g, np.full(g.m, 0.05), 1.7)  # aggressive pruning
        raw = ml.mc_opt(pg, 20_000, seed=5)
        pruned = ml.mc_opt(pg, 20_000, seed=5, use_pruned=True)
        assert pruned.mean < raw.mean
        with pytest.raises(ValidationError):
            ml.mc_opt(g, 100, seed=1, use_pruned=True)


class TestExactExpectedOpt:
    def test_single_edge(self):
        g = ml.StochasticGraph.from_pairs(1, 1, [(0, 0, 0.7)])
        assert ml.exact_expected_opt(g) == pytest.approx(0.7)

    def test_two_parallel(self):
        g = ml.StochasticGraph.from_pairs(1, 1, [(0, 0, 0.5), (0, 0, 0.5)])
        assert ml.exact_expected_opt(g) == pytest.approx(0.75)

    def test_equals_match_probability_mass(self):
        g = ml.gen_random(4, 3, 11, 0.1, 0.9, seed=6)
        assert ml.exact_expected_opt(g) == pytest.approx(
            float(ml.exact_match_probabilities(g).sum()), abs=1e-9
        )

    def test_below_lp_objective(self):
        for seed in (7, 8, 9):
            g = ml.gen_random(3, 3, 9, 0.1, 1.0, seed=seed)
            assert ml.exact_expected_opt(g) <= ml.solve_lp(g).objective + 1e-7

    def test_cap(self):
        g = ml.complete_graph(5, 0.5)
        with pytest.raises(CapabilityError):
            ml.exact_expected_opt(g)


class TestCompetitiveReport:
    def test_exact_denominator(self):
        alg = ml.McEstimate(mean=0.5, stderr=0.0, trials=10, seed=1)
        report = ml.competitive_report(alg, 1.0)
        assert report.ratio == 0.5
        assert report.opt_exact

    def test_undefined_ratio(self):
        alg = ml.McEstimate(mean=0.5, stderr=0.0, trials=10, seed=1)
        with pytest.raises(UndefinedRatioError):
            ml.competitive_report(alg, 0.0)

    def test_ci_is_conservative(self):
        alg = ml.McEstimate(mean=0.5, stderr=0.01, trials=100, seed=1)
        opt = ml.McEstimate(mean=1.0, stderr=0.02, trials=100, seed=1)
        report = ml.competitive_report(alg, opt)
        lo, hi = report.ratio_ci
        assert lo <= report.ratio <= hi
        assert lo == pytest.approx((0.5 - 0.03) / (1.0 + 0.06))
        assert hi == pytest.approx((0.5 + 0.03) / (1.0 - 0.06))


class TestPairedRatio:
    def test_half_guarantee_and_goal_ratio(self):
        g = ml.gen_random(6, 6, 30, 0.05, 0.9, seed=12)
        pg = ml.prune(g, ml.solve_lp(g).x, 1.7)
        result = ml.mc_ratio_paired(pg, "random", 20_000, seed=31)
        assert result.half_violations == 0
        assert result.report.ratio > 0.5
        assert result.alg.mean <= result.opt.mean

    def test_deterministic_across_threads(self):
        g = ml.gen_random(4, 4, 12, 0.2, 0.8, seed=13)
        pg = ml.prune(g, ml.solve_lp(g).x, 1.7)
        a = ml.mc_ratio_paired(pg, "random", 70_000, seed=3, threads=1)
        b = ml.mc_ratio_paired(pg, "random", 70_000, seed=3, threads=4)
        assert a.alg.mean == b.alg.mean
        assert a.opt.mean == b.opt.mean

    def test_greedy_below_optimum_per_instance(self):
        # with shared draws the greedy realization is a subgraph of the
        # benchmark realization, so the means must be ordered
        for seed in (41, 42):
            g = ml.gen_random(5, 5, 18, 0.1, 0.95, seed=seed)
            pg = ml.prune(g, ml.solve_lp(g).x, 1.7)
            result = ml.mc_ratio_paired(pg, ml.order_as_listed(g.m), 5000, seed=seed)
            assert result.alg.mean <= result.opt.mean + 1e-12
