"""Offline benchmarks: maximum matchings, exact and Monte Carlo optimum.

The benchmark is the expected size of a maximum matching over the edge
randomness, computed exactly by realization enumeration on tiny instances
and by Monte Carlo otherwise.  Competitive reports combine an algorithm
estimate with a benchmark into a ratio with a conservative interval.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import CapabilityError, UndefinedRatioError, ValidationError
from .graphs import StochasticGraph
from .pruning import PrunedGraph
from .simulate import McEstimate, _edge_arrays, _run_chunked


def max_matching(edges, n_left: int, n_right: int) -> tuple[int, tuple[tuple[int, int], ...]]:
    """Maximum-cardinality matching of a realized bipartite edge list.

    Layered augmenting-path search (Hopcroft-Karp phases).  Returns the size
    and one maximum matching as (u, v) pairs.
    """
    adj: list[list[int]] = [[] for _ in range(n_left)]
    for u, v in edges:
        if not (0 <= u < n_left and 0 <= v < n_right):
            raise ValidationError(f"edge ({u}, {v}) out of range")
        adj[u].append(v)
    match_l = [-1] * n_left
    match_r = [-1] * n_right
    inf = math.inf
    dist = [inf] * n_left

    def bfs() -> bool:
        queue: deque[int] = deque()
        for u in range(n_left):
            if match_l[u] == -1:
                dist[u] = 0
                queue.append(u)
            else:
                dist[u] = inf
        found = False
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                w = match_r[v]
                if w == -1:
                    found = True
                elif dist[w] == inf:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return found

    def dfs(u: int) -> bool:
        for v in adj[u]:
            w = match_r[v]
            if w == -1 or (dist[w] == dist[u] + 1 and dfs(w)):
                match_l[u] = v
                match_r[v] = u
                return True
        dist[u] = inf
        return False

    size = 0
    while bfs():
        for u in range(n_left):
            if match_l[u] == -1 and dfs(u):
                size += 1
    pairs = tuple((u, match_l[u]) for u in range(n_left) if match_l[u] != -1)
    return size, pairs


def max_matching_bruteforce(edges, n_left: int, n_right: int) -> int:
    """Reference maximum matching by exhaustive subset search (<= 20 edges)."""
    m = len(edges)
    if m > 20:
        raise CapabilityError(f"exhaustive matching capped at 20 edges, got {m}")
    best = 0
    for mask in range(1 << m):
        used_l = 0
        used_r = 0
        size = 0
        ok = True
        for i in range(m):
            if mask >> i & 1:
                u, v = edges[i]
                if used_l >> u & 1 or used_r >> v & 1:
                    ok = False
                    break
                used_l |= 1 << u
                used_r |= 1 << v
                size += 1
        if ok and size > best:
            best = size
    return best


def mc_opt(
    graph: StochasticGraph | PrunedGraph,
    trials: int,
    seed: int,
    use_pruned: bool = False,
    threads: int = 1,
) -> McEstimate:
    """Monte Carlo expected maximum matching size.

    With ``use_pruned=False`` realizations follow the original probabilities
    (the benchmark); ``use_pruned=True`` samples the pruned probabilities
    instead (diagnostics only) and requires a :class:`PrunedGraph`.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    n_left, n_right, eu, ev, y, p = _edge_arrays(graph)
    if use_pruned:
        if not isinstance(graph, PrunedGraph):
            raise ValidationError("use_pruned requires a PrunedGraph")
        probs = y
    else:
        probs = p
    s, s2 = _run_chunked(
        _kernels.opt_mc, (n_left, n_right, eu, ev, probs), trials, seed, threads
    )
    mean = s / trials
    if trials >= 2:
        var = max(0.0, (s2 - trials * mean * mean) / (trials - 1))
        stderr = math.sqrt(var / trials)
    else:
        stderr = 0.0
    return McEstimate(mean=mean, stderr=stderr, trials=trials, seed=seed)


def exact_expected_opt(g: StochasticGraph, max_edges: int = 22) -> float:
    """Exact expected maximum matching size by realization enumeration."""
    m = g.m
    if m > max_edges:
        raise CapabilityError(f"exact enumeration capped at {max_edges} edges, got {m}")
    if m == 0:
        return 0.0
    eu = [e.u for e in g.edges]
    ev = [e.v for e in g.edges]
    p = [e.p for e in g.edges]
    total = 0.0
    for mask in range(1 << m):
        prob = 1.0
        realized = []
        for e in range(m):
            if mask >> e & 1:
                prob *= p[e]
                realized.append((eu[e], ev[e]))
            else:
                prob *= 1.0 - p[e]
        if prob == 0.0 or not realized:
            continue
        size, _ = max_matching(realized, g.n_left, g.n_right)
        total += prob * size
    return total


@dataclass(frozen=True)
class RatioReport:
    """Algorithm-vs-benchmark summary with a conservative ratio interval."""

    alg: McEstimate
    opt: McEstimate
    opt_exact: bool
    ratio: float
    ratio_ci: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "alg": {"mean": self.alg.mean, "stderr": self.alg.stderr,
                    "trials": self.alg.trials, "seed": self.alg.seed},
            "opt": {"mean": self.opt.mean, "stderr": self.opt.stderr,
                    "trials": self.opt.trials, "seed": self.opt.seed,
                    "exact": self.opt_exact},
            "ratio": self.ratio,
            "ratio_ci": list(self.ratio_ci),
        }


def competitive_report(alg: McEstimate, opt_source) -> RatioReport:
    """Form the ratio of an algorithm estimate to a benchmark.

    ``opt_source`` is either an :class:`McEstimate` or an exact float.  The
    interval divides the 3-sigma extremes of the numerator by the opposite
    extremes of the denominator, clipped to [0, inf).
    """
    if isinstance(opt_source, McEstimate):
        opt = opt_source
        opt_exact = False
    else:
        opt = McEstimate(mean=float(opt_source), stderr=0.0, trials=0, seed=0)
        opt_exact = True
    if opt.mean <= 0:
        raise UndefinedRatioError(f"benchmark mean {opt.mean!r} is not positive")
    ratio = alg.mean / opt.mean
    lo_den = opt.mean + 3 * opt.stderr
    hi_den = opt.mean - 3 * opt.stderr
    lo = max(0.0, (alg.mean - 3 * alg.stderr) / lo_den)
    hi = (alg.mean + 3 * alg.stderr) / hi_den if hi_den > 0 else math.inf
    return RatioReport(alg=alg, opt=opt, opt_exact=opt_exact, ratio=ratio, ratio_ci=(lo, hi))


@dataclass(frozen=True)
class PairedRatioResult:
    """Shared-realization greedy vs optimum estimates on one instance."""

    alg: McEstimate
    opt: McEstimate
    half_violations: int
    report: RatioReport


def mc_ratio_paired(
    pg: PrunedGraph,
    order,
    trials: int,
    seed: int,
    threads: int = 1,
) -> PairedRatioResult:
    """Greedy-on-pruned vs offline optimum with common random numbers.

    One uniform per edge per trial drives both sides (realized for greedy
    when below ``y_e``, for the benchmark when below ``p_e``).  Also verifies
    per trial that greedy reaches at least half the maximum matching of its
    own realization; ``half_violations`` counts failures (always 0 for a
    correct greedy).
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    n_left, n_right, eu, ev, y, p = _edge_arrays(pg)
    from .simulate import _resolve_order

    order_arr, random_order = _resolve_order(order, len(eu))
    alg_s, alg_s2, opt_s, opt_s2, half_viol = _run_chunked(
        _kernels.ratio_mc,
        (n_left, n_right, eu, ev, y, p, order_arr, random_order),
        trials,
        seed,
        threads,
    )

    def est(s, s2):
        mean = s / trials
        if trials >= 2:
            var = max(0.0, (s2 - trials * mean * mean) / (trials - 1))
            return McEstimate(mean=mean, stderr=math.sqrt(var / trials),
                              trials=trials, seed=seed)
        return McEstimate(mean=mean, stderr=0.0, trials=trials, seed=seed)

    alg = est(alg_s, alg_s2)
    opt = est(opt_s, opt_s2)
    report = competitive_report(alg, opt)
    return PairedRatioResult(alg=alg, opt=opt, half_violations=int(half_viol), report=report)
