import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import matchlab as ml
from matchlab.errors import ValidationError
from matchlab.pruning import pruned_from_dict, pruned_to_dict


class TestPrune:
    def test_exponential_branch(self):
        g = ml.StochasticGraph.from_pairs(1, 1, [(0, 0, 0.9)])
        pg = ml.prune(g, [0.1], 1.7)
        assert pg.y[0] == pytest.approx(1 - math.exp(-0.17), abs=1e-12)

    def test_cap_branch(self):
        g = ml.StochasticGraph.from_pairs(1, 1, [(0, 0, 0.05)])
        pg = ml.prune(g, [0.5], 1.7)
        assert pg.y[0] == 0.05

    def test_zero_x_removes_edge(self):
        g = ml.StochasticGraph.from_pairs(1, 1, [(0, 0, 0.4)])
        pg = ml.prune(g, [0.0], 1.7)
        assert pg.y[0] == 0.0

    def test_negative_x_rejected(self):
        g = ml.StochasticGraph.from_pairs(1, 1, [(0, 0, 0.4)])
        with pytest.raises(ValidationError):
            ml.prune(g, [-0.1], 1.7)

    def test_drop_probabilities(self):
        g = ml.StochasticGraph.from_pairs(1, 2, [(0, 0, 0.9), (0, 1, 0.0)])
        pg = ml.prune(g, [0.1, 0.2], 1.7)
        drops = pg.drop_probabilities()
        assert drops[0] == pytest.approx(1 - pg.y[0] / 0.9)
        assert drops[1] == 0.0  # p=0 edges are never realized

    @settings(max_examples=60, deadline=None)
    @given(
        p=st.floats(min_value=0.0, max_value=1.0),
        x=st.floats(min_value=0.0, max_value=2.0),
        c=st.floats(min_value=0.1, max_value=3.0),
    )
    def test_never_increases_probability(self, p, x, c):
        g = ml.StochasticGraph.from_pairs(1, 1, [(0, 0, p)])
        pg = ml.prune(g, [x], c)
        assert pg.y[0] <= p + 1e-15

    def test_identity_when_cap_inactive(self):
        g = ml.gen_random(3, 3, 8, 0.05, 0.4, seed=9)
        x = np.full(g.m, 2.0)  # 1 - e^{-c*2} > 0.4 for c = 1.7
        pg = ml.prune(g, x, 1.7)
        p = np.array([e.p for e in g.edges])
        assert np.array_equal(pg.y, p)


class TestRegularXy:
    def test_per_vertex_unit_sum(self):
        n = 8
        g = ml.gen_complete_uniform(n)
        c = -n * math.log(1 - 1 / n)
        x, y = ml.regular_xy(g, c)
        for ids in g.left_incidence() + g.right_incidence():
            assert sum(x[e] for e in ids) == pytest.approx(1.0, abs=1e-9)
        assert np.array_equal(y, np.array([e.p for e in g.edges]))

    def test_single_edge(self):
        c = 2.0
        g = ml.StochasticGraph.from_pairs(1, 1, [(0, 0, 1 - math.exp(-c))])
        x, y = ml.regular_xy(g, c)
        assert x[0] == pytest.approx(1.0, abs=1e-12)
        assert y[0] == pytest.approx(g.edges[0].p)

    def test_irregular_rejected(self):
        g = ml.StochasticGraph.from_pairs(2, 2, [(0, 0, 0.5), (1, 1, 0.7)])
        with pytest.raises(ValidationError):
            ml.regular_xy(g, math.log(2))

    def test_then_prune_reproduces_probabilities(self):
        n = 5
        g = ml.gen_complete_uniform(n)
        c = -n * math.log(1 - 1 / n)
        x, _ = ml.regular_xy(g, c)
        pg = ml.prune(g, x, c)
        p = np.array([e.p for e in g.edges])
        assert np.max(np.abs(pg.y - p)) < 1e-12


class TestUnpruned:
    def test_identity_probabilities(self):
        g = ml.gen_fig2_hardness(2)  # includes p=1 edges
        pg = ml.unpruned(g)
        assert np.array_equal(pg.y, np.array([e.p for e in g.edges]))


class TestBatchOrder:
    def _graph(self):
        return ml.StochasticGraph.from_pairs(
            2, 2, [(0, 0, 0.3), (1, 1, 0.4), (0, 0, 0.5), (1, 0, 0.2)]
        )

    def test_already_batched_unchanged(self):
        g = self._graph()
        order = ml.ArrivalOrder((0, 2, 1, 3))
        assert ml.batch_order(g, order).sequence == (0, 2, 1, 3)

    def test_batching_rule(self):
        g = self._graph()
        order = ml.ArrivalOrder((0, 1, 2, 3))  # parallel pair 0, 2 separated
        assert ml.batch_order(g, order).sequence == (0, 2, 1, 3)

    def test_idempotent(self):
        g = self._graph()
        once = ml.batch_order(g, ml.ArrivalOrder((3, 2, 1, 0)))
        twice = ml.batch_order(g, once)
        assert once.sequence == twice.sequence

    def test_not_permutation_rejected(self):
        g = self._graph()
        with pytest.raises(ValidationError):
            ml.batch_order(g, (0, 0, 1, 2))

    @settings(max_examples=40, deadline=None)
    @given(perm=st.permutations(list(range(6))))
    def test_output_contiguous_batches(self, perm):
        g = ml.StochasticGraph.from_pairs(
            2, 2, [(0, 0, 0.2), (0, 0, 0.3), (0, 1, 0.4), (1, 1, 0.5), (1, 1, 0.1), (0, 1, 0.6)]
        )
        out = ml.batch_order(g, tuple(perm)).sequence
        assert sorted(out) == list(range(6))
        seen_pairs = []
        for e in out:
            key = (g.edges[e].u, g.edges[e].v)
            if not seen_pairs or seen_pairs[-1] != key:
                assert key not in seen_pairs
                seen_pairs.append(key)


class TestPrunedSerialization:
    def test_roundtrip(self):
        g = ml.gen_random(3, 3, 7, 0.1, 0.9, seed=77)
        pg = ml.prune(g, ml.solve_lp(g).x, 1.7)
        doc = pruned_to_dict(pg)
        back = pruned_from_dict(doc)
        assert back.base == g
        assert np.allclose(back.y, pg.y)
        assert np.allclose(back.x, pg.x)
        assert back.c == pg.c

    def test_non_finite_rejected(self):
        g = ml.gen_fig2_hardness(1)
        pg = ml.unpruned(g)  # x has +inf on p=1 edges
        with pytest.raises(ValidationError):
            pruned_to_dict(pg)
