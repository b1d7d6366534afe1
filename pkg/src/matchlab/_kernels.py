"""Numba kernels for the Monte Carlo paths.

These mirror the documented draw protocol of :mod:`matchlab.rng` exactly
(splitmix64 trial seeds, Fisher-Yates draws first in random-order mode, then
existence draws indexed by edge id).  The pure-Python reference
implementations in :mod:`matchlab.simulate` produce bit-identical trials;
the test suite asserts the equivalence.

All kernels are ``nogil`` so trial ranges can run on a thread pool; callers
merge fixed-size chunks in index order, which keeps results independent of
the worker count.
"""

from __future__ import annotations

import numpy as np
from numba import float64, int64, njit, uint64

GOLD = uint64(0x9E3779B97F4A7C15)
_MIX_A = uint64(0xBF58476D1CE4E5B9)
_MIX_B = uint64(0x94D049BB133111EB)
_INV_2_64 = 1.0 / 2.0**64


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> uint64(30))) * _MIX_A
    z = (z ^ (z >> uint64(27))) * _MIX_B
    return z ^ (z >> uint64(31))


@njit(cache=True, inline="always")
def _trial_seed(master, t):
    return _mix64(master + (uint64(t) + uint64(1)) * GOLD)


@njit(cache=True, inline="always")
def _uniform(seed, k):
    return float64(_mix64(seed + (uint64(k) + uint64(1)) * GOLD)) * _INV_2_64


@njit(cache=True, inline="always")
def _fill_perm(perm, order, seed, random_order):
    """Arrival permutation for one trial; returns draws consumed."""
    m = perm.shape[0]
    for i in range(m):
        perm[i] = order[i]
    if not random_order:
        return uint64(0)
    k = uint64(0)
    for i in range(m - 1, 0, -1):
        j = int64(_uniform(seed, k) * (i + 1))
        k += uint64(1)
        tmp = perm[i]
        perm[i] = perm[j]
        perm[j] = tmp
    return k


@njit(cache=True, nogil=True)
def greedy_mc(n_left, n_right, eu, ev, y, order, random_order, t0, t1, master):
    """Greedy matching sizes over trials [t0, t1); per-vertex match counts."""
    m = eu.shape[0]
    perm = np.empty(m, np.int64)
    matched_l = np.zeros(n_left, np.bool_)
    matched_r = np.zeros(n_right, np.bool_)
    count_l = np.zeros(n_left, np.int64)
    count_r = np.zeros(n_right, np.int64)
    s = 0.0
    s2 = 0.0
    for t in range(t0, t1):
        seed = _trial_seed(master, t)
        base = _fill_perm(perm, order, seed, random_order)
        matched_l[:] = False
        matched_r[:] = False
        size = 0
        for i in range(m):
            e = perm[i]
            if _uniform(seed, base + uint64(e)) < y[e]:
                u = eu[e]
                v = ev[e]
                if not matched_l[u] and not matched_r[v]:
                    matched_l[u] = True
                    matched_r[v] = True
                    size += 1
        s += size
        s2 += size * size
        for u in range(n_left):
            if matched_l[u]:
                count_l[u] += 1
        for v in range(n_right):
            if matched_r[v]:
                count_r[v] += 1
    return s, s2, count_l, count_r


@njit(cache=True, nogil=True)
def event_mc(n_left, n_right, eu, ev, y, order, t0, t1, master):
    """Greedy pass collecting the event statistics used by the estimators.

    Per edge: trials where its left endpoint was unmatched at arrival.
    Per left vertex: trials unmatched at the end, and first/second moments
    of the per-trial sum  S_u = sum over incident edges of y_e * [u unmatched
    at e's arrival].  Arrival order is fixed (no shuffle draws).
    """
    m = eu.shape[0]
    matched_l = np.zeros(n_left, np.bool_)
    matched_r = np.zeros(n_right, np.bool_)
    unmatched_before = np.zeros(m, np.int64)
    end_unmatched = np.zeros(n_left, np.int64)
    s_sum = np.zeros(n_left, np.float64)
    s_sumsq = np.zeros(n_left, np.float64)
    s_trial = np.zeros(n_left, np.float64)
    s = 0.0
    s2 = 0.0
    tot_sum = 0.0
    tot_sumsq = 0.0
    cross_sum = 0.0
    for t in range(t0, t1):
        seed = _trial_seed(master, t)
        matched_l[:] = False
        matched_r[:] = False
        for u in range(n_left):
            s_trial[u] = 0.0
        size = 0
        for i in range(m):
            e = order[i]
            u = eu[e]
            v = ev[e]
            if not matched_l[u]:
                unmatched_before[e] += 1
                s_trial[u] += y[e]
            if _uniform(seed, uint64(e)) < y[e]:
                if not matched_l[u] and not matched_r[v]:
                    matched_l[u] = True
                    matched_r[v] = True
                    size += 1
        s += size
        s2 += size * size
        s_tot = 0.0
        for u in range(n_left):
            if not matched_l[u]:
                end_unmatched[u] += 1
            s_sum[u] += s_trial[u]
            s_sumsq[u] += s_trial[u] * s_trial[u]
            s_tot += s_trial[u]
        tot_sum += s_tot
        tot_sumsq += s_tot * s_tot
        cross_sum += size * s_tot
    return s, s2, unmatched_before, end_unmatched, s_sum, s_sumsq, tot_sum, tot_sumsq, cross_sum


@njit(cache=True)
def _hk_size(n_left, adj_start, adj_v, deg, match_l, match_r, dist, queue, stk_u, stk_i):
    """Maximum bipartite matching size (layered augmenting paths, iterative)."""
    inf = int64(1 << 60)
    for u in range(n_left):
        match_l[u] = -1
    for v in range(match_r.shape[0]):
        match_r[v] = -1
    size = 0
    while True:
        qh = 0
        qt = 0
        for u in range(n_left):
            if match_l[u] == -1:
                dist[u] = 0
                queue[qt] = u
                qt += 1
            else:
                dist[u] = inf
        found = False
        while qh < qt:
            u = queue[qh]
            qh += 1
            s = adj_start[u]
            for i in range(deg[u]):
                v = adj_v[s + i]
                w = match_r[v]
                if w == -1:
                    found = True
                elif dist[w] == inf:
                    dist[w] = dist[u] + 1
                    queue[qt] = w
                    qt += 1
        if not found:
            return size
        for u0 in range(n_left):
            if match_l[u0] != -1:
                continue
            top = 0
            stk_u[0] = u0
            stk_i[0] = 0
            while top >= 0:
                u = stk_u[top]
                i = stk_i[top]
                s = adj_start[u]
                progressed = False
                while i < deg[u]:
                    v = adj_v[s + i]
                    i += 1
                    w = match_r[v]
                    if w == -1:
                        stk_i[top] = i
                        match_r[v] = u
                        match_l[u] = v
                        for lev in range(top - 1, -1, -1):
                            pu = stk_u[lev]
                            pv = adj_v[adj_start[pu] + stk_i[lev] - 1]
                            match_r[pv] = pu
                            match_l[pu] = pv
                        size += 1
                        top = -1
                        progressed = True
                        break
                    if dist[w] == dist[u] + 1:
                        stk_i[top] = i
                        top += 1
                        stk_u[top] = w
                        stk_i[top] = 0
                        progressed = True
                        break
                if not progressed:
                    dist[u] = inf
                    top -= 1
    return size


@njit(cache=True, nogil=True)
def opt_mc(n_left, n_right, eu, ev, p, t0, t1, master):
    """Maximum matching sizes of sampled realizations over trials [t0, t1)."""
    m = eu.shape[0]
    deg = np.zeros(n_left, np.int64)
    adj_start = np.zeros(n_left + 1, np.int64)
    adj_v = np.empty(m, np.int64)
    match_l = np.empty(n_left, np.int64)
    match_r = np.empty(n_right, np.int64)
    dist = np.empty(n_left, np.int64)
    queue = np.empty(n_left + 1, np.int64)
    stk_u = np.empty(n_left + 1, np.int64)
    stk_i = np.empty(n_left + 1, np.int64)
    exists = np.empty(m, np.bool_)
    s = 0.0
    s2 = 0.0
    for t in range(t0, t1):
        seed = _trial_seed(master, t)
        for e in range(m):
            exists[e] = _uniform(seed, uint64(e)) < p[e]
        for u in range(n_left):
            deg[u] = 0
        for e in range(m):
            if exists[e]:
                deg[eu[e]] += 1
        adj_start[0] = 0
        for u in range(n_left):
            adj_start[u + 1] = adj_start[u] + deg[u]
            deg[u] = 0
        for e in range(m):
            if exists[e]:
                u = eu[e]
                adj_v[adj_start[u] + deg[u]] = ev[e]
                deg[u] += 1
        sz = _hk_size(n_left, adj_start, adj_v, deg, match_l, match_r, dist, queue, stk_u, stk_i)
        s += sz
        s2 += sz * sz
    return s, s2


@njit(cache=True, nogil=True)
def ratio_mc(n_left, n_right, eu, ev, y, p, order, random_order, t0, t1, master):
    """Paired greedy-vs-optimum trials with shared existence draws.

    Each trial draws one uniform per edge: the greedy side realizes the edge
    when the draw is below the pruned probability ``y_e``, the benchmark side
    when below the original ``p_e`` (a monotone coupling since y <= p).
    Also computes the maximum matching of the greedy-side realization and
    counts trials where greedy falls below half of it.
    """
    m = eu.shape[0]
    perm = np.empty(m, np.int64)
    matched_l = np.zeros(n_left, np.bool_)
    matched_r = np.zeros(n_right, np.bool_)
    deg = np.zeros(n_left, np.int64)
    adj_start = np.zeros(n_left + 1, np.int64)
    adj_v = np.empty(m, np.int64)
    match_l = np.empty(n_left, np.int64)
    match_r = np.empty(n_right, np.int64)
    dist = np.empty(n_left, np.int64)
    queue = np.empty(n_left + 1, np.int64)
    stk_u = np.empty(n_left + 1, np.int64)
    stk_i = np.empty(n_left + 1, np.int64)
    draw = np.empty(m, np.float64)
    alg_s = 0.0
    alg_s2 = 0.0
    opt_s = 0.0
    opt_s2 = 0.0
    half_violations = 0
    for t in range(t0, t1):
        seed = _trial_seed(master, t)
        base = _fill_perm(perm, order, seed, random_order)
        for e in range(m):
            draw[e] = _uniform(seed, base + uint64(e))
        matched_l[:] = False
        matched_r[:] = False
        size = 0
        for i in range(m):
            e = perm[i]
            if draw[e] < y[e]:
                u = eu[e]
                v = ev[e]
                if not matched_l[u] and not matched_r[v]:
                    matched_l[u] = True
                    matched_r[v] = True
                    size += 1
        # maximum matching of the greedy-side realization (half guarantee)
        for u in range(n_left):
            deg[u] = 0
        for e in range(m):
            if draw[e] < y[e]:
                deg[eu[e]] += 1
        adj_start[0] = 0
        for u in range(n_left):
            adj_start[u + 1] = adj_start[u] + deg[u]
            deg[u] = 0
        for e in range(m):
            if draw[e] < y[e]:
                u = eu[e]
                adj_v[adj_start[u] + deg[u]] = ev[e]
                deg[u] += 1
        max_y = _hk_size(n_left, adj_start, adj_v, deg, match_l, match_r, dist, queue, stk_u, stk_i)
        if 2 * size < max_y:
            half_violations += 1
        # maximum matching of the benchmark realization
        for u in range(n_left):
            deg[u] = 0
        for e in range(m):
            if draw[e] < p[e]:
                deg[eu[e]] += 1
        adj_start[0] = 0
        for u in range(n_left):
            adj_start[u + 1] = adj_start[u] + deg[u]
            deg[u] = 0
        for e in range(m):
            if draw[e] < p[e]:
                u = eu[e]
                adj_v[adj_start[u] + deg[u]] = ev[e]
                deg[u] += 1
        max_p = _hk_size(n_left, adj_start, adj_v, deg, match_l, match_r, dist, queue, stk_u, stk_i)
        alg_s += size
        alg_s2 += size * size
        opt_s += max_p
        opt_s2 += max_p * max_p
    return alg_s, alg_s2, opt_s, opt_s2, half_violations
