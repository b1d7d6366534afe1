import numpy as np
import pytest

import matchlab as ml


@pytest.fixture(scope="session")
def warm_kernels():
    """Trigger JIT compilation so timed budgets measure the algorithms."""
    g = ml.gen_random(3, 3, 6, 0.2, 0.8, seed=0)
    pg = ml.prune(g, np.full(g.m, 0.2), 1.7)
    ml.mc_greedy(pg, "random", 8, seed=0)
    ml.mc_opt(g, 8, seed=0)
    ml.mc_ratio_paired(pg, ml.order_as_listed(g.m), 8, seed=0)
    ml.estimate_event_terms(pg, ml.order_as_listed(g.m), 8, seed=0)
    return True
