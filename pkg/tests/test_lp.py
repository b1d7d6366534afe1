import math
import random

import numpy as np
import pytest

import matchlab as ml
from matchlab.errors import CapabilityError, ValidationError
from matchlab.lp import brute_force_separate, solve_lp_bruteforce


class TestConstraintRhs:
    def test_empty_product(self):
        assert ml.constraint_rhs([]) == 0.0

    def test_certain_edge_dominates(self):
        assert ml.constraint_rhs([1.0, 0.3]) == 1.0

    def test_two_halves(self):
        assert ml.constraint_rhs([0.5, 0.5]) == pytest.approx(0.75)


class TestSeparate:
    def test_single_edge_violation(self):
        result = ml.separate([(0, 0.5, 0.7)])
        assert result.violated
        assert result.subset == (0,)
        assert result.violation == pytest.approx(0.2)

    def test_no_violation_at_true_probabilities(self):
        g = ml.gen_random(3, 3, 6, 0.1, 0.9, seed=5)
        x = ml.exact_match_probabilities(g)
        for ids in g.left_incidence() + g.right_incidence():
            triples = [(e, g.edges[e].p, x[e]) for e in ids]
            assert not ml.separate(triples).violated

    def test_matches_bruteforce_on_random_vertices(self):
        rng = random.Random(2024)
        for _ in range(300):
            deg = rng.randint(1, 12)
            ps = [rng.choice([0.0, 1.0, rng.random()]) for _ in range(deg)]
            xs = [rng.random() * (p if rng.random() < 0.7 else 1.0) for p in ps]
            triples = list(zip(range(deg), ps, xs))
            fast = ml.separate(triples)
            slow = brute_force_separate(triples)
            assert abs(fast.violation - slow.violation) <= 1e-9


class TestSolveLp:
    def test_single_edge(self):
        g = ml.StochasticGraph.from_pairs(1, 1, [(0, 0, 0.6)])
        sol = ml.solve_lp(g)
        assert sol.objective == pytest.approx(0.6, abs=1e-8)
        assert sol.x[0] == pytest.approx(0.6, abs=1e-8)

    def test_empty_graph(self):
        g = ml.StochasticGraph.from_pairs(2, 2, [])
        sol = ml.solve_lp(g)
        assert sol.objective == 0.0
        assert len(sol.x) == 0

    def test_complete_certain_graph(self):
        # K_{n,n} with p=1: the optimum is n (e.g. x_e = 1/n on all edges)
        for n in (2, 4):
            g = ml.complete_graph(n, 1.0)
            sol = ml.solve_lp(g)
            assert sol.objective == pytest.approx(n, abs=1e-7)

    def test_upper_bounds_exact_optimum(self):
        g = ml.gen_complete_uniform(2)
        sol = ml.solve_lp(g)
        assert sol.objective >= ml.exact_expected_opt(g) - 1e-8

    def test_matches_bruteforce_lp(self):
        for seed in range(8):
            g = ml.gen_random(3, 3, 8, 0.05, 0.95, seed=seed)
            sol = ml.solve_lp(g, tol=1e-8)
            ref = solve_lp_bruteforce(g)
            assert sol.objective == pytest.approx(ref, abs=1e-7 * (1 + ref))

    def test_generated_constraints_satisfied(self):
        g = ml.gen_random(4, 4, 12, 0.1, 1.0, seed=11)
        sol = ml.solve_lp(g)
        for _, _, edges in sol.generated_constraints:
            lhs = sum(sol.x[e] for e in edges)
            rhs = ml.constraint_rhs(g.edges[e].p for e in edges)
            assert lhs <= rhs + 1e-7

    def test_resolve_from_constraints_is_fast(self):
        g = ml.gen_random(4, 4, 12, 0.1, 1.0, seed=13)
        sol = ml.solve_lp(g)
        warm = ml.solve_lp(g, initial_constraints=sol.generated_constraints)
        assert warm.outer_iterations <= 2
        assert warm.objective == pytest.approx(sol.objective, abs=1e-7)

    def test_scaled_solution_stays_feasible(self):
        g = ml.gen_random(4, 4, 10, 0.1, 0.9, seed=17)
        sol = ml.solve_lp(g)
        for lam in (0.0, 0.3, 0.8, 1.0):
            report = ml.verify_feasible(g, lam * sol.x, mode="oracle")
            assert report.feasible


class TestVerifyFeasible:
    def test_zero_feasible(self):
        g = ml.gen_random(3, 3, 7, 0.1, 0.9, seed=23)
        assert ml.verify_feasible(g, np.zeros(g.m), mode="oracle").feasible
        assert ml.verify_feasible(g, np.zeros(g.m), mode="bruteforce").feasible

    def test_lp_solution_feasible_both_modes(self):
        g = ml.gen_random(3, 3, 9, 0.1, 0.9, seed=29)
        sol = ml.solve_lp(g)
        assert ml.verify_feasible(g, sol.x, mode="oracle", tol=1e-7).feasible
        assert ml.verify_feasible(g, sol.x, mode="bruteforce", tol=1e-7).feasible

    def test_singleton_violation_reported(self):
        g = ml.gen_random(3, 3, 6, 0.2, 0.8, seed=31)
        x = np.array([e.p for e in g.edges])
        x[2] += 0.1
        report = ml.verify_feasible(g, x, mode="bruteforce")
        assert not report.feasible
        assert any(sub == (2,) for _, _, sub, _ in report.violations)

    def test_degree_cap(self):
        g = ml.complete_graph(5, 0.5)
        with pytest.raises(CapabilityError):
            ml.verify_feasible(g, np.zeros(g.m), mode="bruteforce", max_degree_for_bruteforce=3)

    def test_mode_validation(self):
        g = ml.gen_complete_uniform(2)
        with pytest.raises(ValidationError):
            ml.verify_feasible(g, np.zeros(g.m), mode="fancy")


class TestExactMatchProbabilities:
    def test_single_edge(self):
        g = ml.StochasticGraph.from_pairs(1, 1, [(0, 0, 0.7)])
        assert ml.exact_match_probabilities(g)[0] == pytest.approx(0.7)

    def test_two_parallel_edges_tiebreak(self):
        g = ml.StochasticGraph.from_pairs(1, 1, [(0, 0, 0.5), (0, 0, 0.5)])
        x = ml.exact_match_probabilities(g)
        assert x[0] == pytest.approx(0.5)
        assert x[1] == pytest.approx(0.25)
        assert x.sum() == pytest.approx(0.75)

    def test_sum_is_expected_optimum(self):
        for seed in (1, 2, 3):
            g = ml.gen_random(3, 4, 9, 0.1, 0.9, seed=seed)
            x = ml.exact_match_probabilities(g)
            assert x.sum() == pytest.approx(ml.exact_expected_opt(g), abs=1e-9)

    def test_lp_feasible(self):
        for seed in (4, 5):
            g = ml.gen_random(3, 3, 8, 0.1, 1.0, seed=seed)
            x = ml.exact_match_probabilities(g)
            assert ml.verify_feasible(g, x, mode="bruteforce").feasible

    def test_size_cap(self):
        g = ml.complete_graph(5, 0.5)
        with pytest.raises(CapabilityError):
            ml.exact_match_probabilities(g)
