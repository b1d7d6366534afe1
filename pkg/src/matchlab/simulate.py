"""Greedy execution on realized pruned graphs and the Monte Carlo harness.

The online policy is plain greedy: edges arrive in a given order, each
realized edge is matched iff both endpoints are still free.  The harness
estimates expected matching size, per-edge event probabilities, and the
per-edge contribution bounds used in the competitive analysis.

Trial streams follow :mod:`matchlab.rng`: per-trial seeds come from a
splitmix64 counter, random-order mode consumes ``m-1`` Fisher-Yates draws
first, and existence draws are indexed by edge id (so realizations are
independent of arrival order).  ``reference_trial`` is the pure-Python
reference of this protocol; the numba kernels replicate it bit-for-bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ValidationError
from .graphs import Realization, StochasticGraph
from .pruning import PrunedGraph
from .rng import TrialStream

CHUNK_TRIALS = 1 << 16


@dataclass(frozen=True)
class ArrivalOrder:
    """A permutation of edge ids; position = arrival time."""

    sequence: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.sequence) != list(range(len(self.sequence))):
            raise ValidationError("arrival order must be a permutation of [0, m)")

    def __len__(self) -> int:
        return len(self.sequence)


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo estimate: mean, standard error, trial count, master seed."""

    mean: float
    stderr: float
    trials: int
    seed: int


@dataclass(frozen=True)
class MatchingResult:
    matched_edges: tuple[int, ...]
    size: int
    matched_left: np.ndarray
    matched_right: np.ndarray


def order_as_listed(m: int) -> ArrivalOrder:
    return ArrivalOrder(tuple(range(m)))


def order_random(m: int, seed: int) -> ArrivalOrder:
    """Deterministic uniform permutation drawn from the documented stream."""
    perm = list(range(m))
    TrialStream(seed, 0).shuffle(perm)
    return ArrivalOrder(tuple(perm))


def order_red_first(g: StochasticGraph) -> ArrivalOrder:
    """Diagonal ("red") edges first for the regular hard instance.

    Validates the structural signature of :func:`~matchlab.graphs.gen_fig1_regular`;
    the cross edges keep their listed order.
    """
    side = g.n_left
    if g.n_right != side or side < 3 or side % 2 == 0:
        raise ValidationError("not a regular hard instance: sides must be equal and odd")
    n = (side - 1) // 2
    if g.m != (n + 1) * (2 * n + 1):
        raise ValidationError("not a regular hard instance: unexpected edge count")
    red = [e.id for e in g.edges if e.u == e.v and e.u <= n]
    if len(red) != n + 1:
        raise ValidationError("not a regular hard instance: diagonal block missing")
    rest = [e.id for e in g.edges if e.id not in set(red)]
    return ArrivalOrder(tuple(red + rest))


def order_type1_first(g: StochasticGraph) -> ArrivalOrder:
    """Certain block edges first for the online-hardness instance.

    Validates the structural signature of :func:`~matchlab.graphs.gen_fig2_hardness`.
    """
    side = g.n_left
    if g.n_right != side or side < 2 or side % 2 == 1:
        raise ValidationError("not a hardness instance: sides must be equal and even")
    n = side // 2
    if g.m != n * n + 2 * n:
        raise ValidationError("not a hardness instance: unexpected edge count")
    block = [e.id for e in g.edges if e.p == 1.0 and e.u < n and e.v < n]
    if len(block) != n * n:
        raise ValidationError("not a hardness instance: certain block missing")
    rest = [e.id for e in g.edges if e.id not in set(block)]
    return ArrivalOrder(tuple(block + rest))


def _edge_arrays(graph: PrunedGraph | StochasticGraph):
    """(n_left, n_right, eu, ev, y, p) with y=p for an unpruned graph."""
    base = graph.base if isinstance(graph, PrunedGraph) else graph
    eu, ev, p, _ = base.arrays()
    y = graph.y if isinstance(graph, PrunedGraph) else p
    return base.n_left, base.n_right, eu, ev, np.asarray(y, np.float64), p


def _resolve_order(order, m: int) -> tuple[np.ndarray, bool]:
    if isinstance(order, str):
        if order != "random":
            raise ValidationError(f"unknown order spec {order!r}")
        return np.arange(m, dtype=np.int64), True
    if isinstance(order, ArrivalOrder):
        seq = order.sequence
    else:
        seq = tuple(order)
    if len(seq) != m:
        raise ValidationError(f"order has length {len(seq)}, expected {m}")
    arr = np.asarray(seq, dtype=np.int64)
    if np.any(np.sort(arr) != np.arange(m)):
        raise ValidationError("arrival order must be a permutation of [0, m)")
    return arr, False


def run_greedy(
    graph: PrunedGraph | StochasticGraph, order, realization: Realization
) -> MatchingResult:
    """Deterministic greedy pass over one realization (reference path)."""
    n_left, n_right, eu, ev, _, _ = _edge_arrays(graph)
    m = len(eu)
    seq, random_order = _resolve_order(order, m)
    if random_order:
        raise ValidationError("run_greedy needs a concrete arrival order")
    exists = np.asarray(realization, dtype=bool)
    if exists.shape != (m,):
        raise ValidationError(f"realization must have length {m}")
    matched_l = np.zeros(n_left, dtype=bool)
    matched_r = np.zeros(n_right, dtype=bool)
    picked: list[int] = []
    for e in seq:
        if exists[e] and not matched_l[eu[e]] and not matched_r[ev[e]]:
            matched_l[eu[e]] = True
            matched_r[ev[e]] = True
            picked.append(int(e))
    return MatchingResult(
        matched_edges=tuple(picked),
        size=len(picked),
        matched_left=matched_l,
        matched_right=matched_r,
    )


def reference_trial(y, order_seq, random_order: bool, master: int, trial_index: int):
    """(arrival permutation, realization) for one trial, pure Python.

    This is the normative definition of the trial stream; the kernels match
    it bit-for-bit.
    """
    m = len(y)
    stream = TrialStream(master, trial_index)
    perm = list(order_seq)
    if random_order:
        stream.shuffle(perm)
    exists = np.fromiter(
        (stream.uniform() < y[e] for e in range(m)), dtype=bool, count=m
    )
    return perm, exists


def _chunk_ranges(trials: int):
    return [(t0, min(t0 + CHUNK_TRIALS, trials)) for t0 in range(0, trials, CHUNK_TRIALS)]


def _run_chunked(kernel, static_args: tuple, trials: int, master: int, threads: int):
    """Run a trial kernel over fixed chunks and merge in chunk order.

    Chunk boundaries do not depend on the worker count, and the merge is a
    component-wise sum performed in chunk-index order, so results are
    identical for any ``threads``.
    """
    ranges = _chunk_ranges(trials)
    master64 = np.uint64(master & 0xFFFFFFFFFFFFFFFF)

    def call(rng_pair):
        return kernel(*static_args, rng_pair[0], rng_pair[1], master64)

    if threads <= 1 or len(ranges) == 1:
        parts = [call(r) for r in ranges]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(call, ranges))
    merged = list(parts[0])
    for part in parts[1:]:
        for i, value in enumerate(part):
            merged[i] = merged[i] + value
    return tuple(merged)


def _mean_stderr(s: float, s2: float, trials: int) -> tuple[float, float]:
    mean = s / trials
    if trials < 2:
        return mean, 0.0
    var = max(0.0, (s2 - trials * mean * mean) / (trials - 1))
    return mean, math.sqrt(var / trials)


@dataclass(frozen=True)
class GreedyMcResult:
    estimate: McEstimate
    left_match_freq: np.ndarray
    right_match_freq: np.ndarray


def mc_greedy(
    graph: PrunedGraph | StochasticGraph,
    order,
    trials: int,
    seed: int,
    threads: int = 1,
) -> GreedyMcResult:
    """Estimate the expected greedy matching size.

    ``order`` is a fixed :class:`ArrivalOrder` or the string ``"random"``
    for a fresh uniform order per trial.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    n_left, n_right, eu, ev, y, _ = _edge_arrays(graph)
    order_arr, random_order = _resolve_order(order, len(eu))
    s, s2, count_l, count_r = _run_chunked(
        _kernels.greedy_mc,
        (n_left, n_right, eu, ev, y, order_arr, random_order),
        trials,
        seed,
        threads,
    )
    mean, stderr = _mean_stderr(s, s2, trials)
    return GreedyMcResult(
        estimate=McEstimate(mean=mean, stderr=stderr, trials=trials, seed=seed),
        left_match_freq=count_l / trials,
        right_match_freq=count_r / trials,
    )


def q_values(graph: PrunedGraph | StochasticGraph, order) -> tuple[np.ndarray, np.ndarray]:
    """Exact first-realization probabilities per edge, for both endpoints.

    ``q_left[e]`` is the probability that no earlier-arriving edge at the
    left endpoint of ``e`` is realized (product of ``1-y`` over the earlier
    incident edges); ``q_right`` likewise for right endpoints.
    """
    n_left, n_right, eu, ev, y, _ = _edge_arrays(graph)
    m = len(eu)
    seq, random_order = _resolve_order(order, m)
    if random_order:
        raise ValidationError("q values need a concrete arrival order")
    q_left = np.empty(m)
    q_right = np.empty(m)
    acc_l = np.ones(n_left)
    acc_r = np.ones(n_right)
    for e in seq:
        q_left[e] = acc_l[eu[e]]
        q_right[e] = acc_r[ev[e]]
        acc_l[eu[e]] *= 1.0 - y[e]
        acc_r[ev[e]] *= 1.0 - y[e]
    return q_left, q_right


def first_edge_lower_bound(pg: PrunedGraph, order) -> float:
    """Analytic lower bound on expected greedy size from first-realization events.

    Sums ``x_e * (1 - exp(-q_u(e) * y_e / x_e))`` over all edges with exact
    ``q`` values; edges with ``x_e = 0`` contribute their limit value 0.
    """
    q_left, _ = q_values(pg, order)
    x = np.asarray(pg.x, np.float64)
    y = np.asarray(pg.y, np.float64)
    # edges with x = 0 contribute the x -> 0+ limit of x*(1-e^{-qy/x}), i.e. 0
    pos = x > 0
    return float(np.sum(x[pos] * -np.expm1(-q_left[pos] * y[pos] / x[pos])))


@dataclass(frozen=True)
class EventEstimates:
    """Exact and Monte Carlo event statistics for the contribution bounds.

    ``term_I[e] = x_e * (1 - exp(-q_e y_e / x_e))`` (exact ``q``);
    ``term_II[e] = y_e * (Pr[left endpoint unmatched at arrival] - q_e)``
    with the unmatched probability estimated over shared trials;
    ``delta[u]`` estimates the end-of-run gap between the probability that
    ``u`` is unmatched and the probability that no incident edge realized.
    ``bound_gap`` is the Monte Carlo mean/stderr of
    ``size - coefficient * S_total``, recentred so that a nonnegative mean
    (within noise) certifies the combined contribution bound.
    """

    alg: McEstimate
    q: np.ndarray
    unmatched_before: np.ndarray
    unmatched_before_stderr: np.ndarray
    term_I: np.ndarray
    term_II: np.ndarray
    delta: np.ndarray
    delta_stderr: np.ndarray
    per_vertex_term_II: np.ndarray
    per_vertex_term_II_stderr: np.ndarray
    combined_bound: float
    bound_gap_mean: float
    bound_gap_stderr: float
    coeff_c: float
    coefficient: float

    @property
    def total_term_I(self) -> float:
        return float(np.sum(self.term_I))

    @property
    def total_term_II(self) -> float:
        return float(np.sum(self.term_II))


def estimate_event_terms(
    pg: PrunedGraph,
    order,
    trials: int,
    seed: int,
    coeff_c: float | None = None,
    threads: int = 1,
) -> EventEstimates:
    """Estimate the per-edge contribution terms over shared trials."""
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    n_left, n_right, eu, ev, y, _ = _edge_arrays(pg)
    m = len(eu)
    seq, random_order = _resolve_order(order, m)
    if random_order:
        raise ValidationError("event estimation needs a concrete arrival order")
    c = pg.c if coeff_c is None else float(coeff_c)
    coefficient = math.exp(-c - c * math.exp(-c))

    (
        s, s2, unmatched_counts, end_unmatched, s_sum, s_sumsq,
        tot_sum, tot_sumsq, cross_sum,
    ) = _run_chunked(
        _kernels.event_mc,
        (n_left, n_right, eu, ev, y, seq),
        trials,
        seed,
        threads,
    )
    alg_mean, alg_stderr = _mean_stderr(s, s2, trials)
    alg = McEstimate(mean=alg_mean, stderr=alg_stderr, trials=trials, seed=seed)

    q_left, _ = q_values(pg, seq)
    p_hat = unmatched_counts / trials
    p_hat_stderr = np.sqrt(np.clip(p_hat * (1.0 - p_hat), 0.0, None) / trials)

    x = np.asarray(pg.x, np.float64)
    term_I = np.zeros(m)
    pos = x > 0
    term_I[pos] = x[pos] * -np.expm1(-q_left[pos] * y[pos] / x[pos])
    term_II = y * (p_hat - q_left)

    # end-of-run quantities per left vertex
    q_end = np.ones(n_left)
    for e in range(m):
        q_end[eu[e]] *= 1.0 - y[e]
    delta = end_unmatched / trials - q_end
    delta_stderr = np.sqrt(
        np.clip((end_unmatched / trials) * (1.0 - end_unmatched / trials), 0.0, None) / trials
    )

    # per-vertex sum of term_II: mean(S_u) - sum over incident edges of y*q
    yq_vertex = np.zeros(n_left)
    for e in range(m):
        yq_vertex[eu[e]] += y[e] * q_left[e]
    s_mean = s_sum / trials
    if trials >= 2:
        s_var = np.clip((s_sumsq - trials * s_mean**2) / (trials - 1), 0.0, None)
        s_stderr = np.sqrt(s_var / trials)
    else:
        s_stderr = np.zeros(n_left)
    per_vertex_term_II = s_mean - yq_vertex
    combined = float(np.sum(term_I) + coefficient * np.sum(term_II))

    # gap statistic D_t = size_t - coefficient * S_total_t over the shared
    # trials; mean(D) >= sum(term_I) - coefficient * sum(y*q) certifies the
    # combined bound, so recentre to make "gap >= 0" the pass condition.
    tot_mean = tot_sum / trials
    d_mean = alg_mean - coefficient * tot_mean
    rhs_exact = float(np.sum(term_I)) - coefficient * float(np.sum(yq_vertex))
    if trials >= 2:
        var_size = max(0.0, (s2 - trials * alg_mean**2) / (trials - 1))
        var_tot = max(0.0, (tot_sumsq - trials * tot_mean**2) / (trials - 1))
        cov = (cross_sum - trials * alg_mean * tot_mean) / (trials - 1)
        var_d = max(0.0, var_size + coefficient**2 * var_tot - 2.0 * coefficient * cov)
        d_stderr = math.sqrt(var_d / trials)
    else:
        d_stderr = 0.0

    return EventEstimates(
        alg=alg,
        q=q_left,
        unmatched_before=p_hat,
        unmatched_before_stderr=p_hat_stderr,
        term_I=term_I,
        term_II=term_II,
        delta=delta,
        delta_stderr=delta_stderr,
        per_vertex_term_II=per_vertex_term_II,
        per_vertex_term_II_stderr=s_stderr,
        combined_bound=combined,
        bound_gap_mean=d_mean - rhs_exact,
        bound_gap_stderr=d_stderr,
        coeff_c=c,
        coefficient=coefficient,
    )
