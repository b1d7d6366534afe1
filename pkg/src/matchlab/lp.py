"""Fractional matching LP with lazy constraint generation.

The LP maximizes the total fractional value ``sum_e x_e`` subject to, for
every vertex ``v`` and every subset ``F`` of its incident edges,
``sum_{e in F} x_e <= 1 - prod_{e in F} (1 - p_e)``: no edge set can be
matched more often than it is realized.  The optimum upper-bounds the
expected maximum matching size.

The constraint family is exponential, so the solver generates rows lazily.
The separation oracle exploits that the marginal gain of adding edge ``e``
to a subset ``S`` is ``x_e - p_e * prod_{e' in S} (1 - p_{e'})``: since the
product only shrinks as ``S`` grows, a maximally violated subset is a prefix
of the edges sorted by ``x_e / p_e`` descending.  The oracle scans all
prefixes (the full set is the last prefix, which also covers p=1 edges whose
right-hand side saturates at 1).  Its correctness is not assumed: the test
suite checks it against exhaustive subset enumeration.

Restricted LPs are solved at interior points (HiGHS IPM without crossover,
tightened tolerance).  Vertex solutions are useless here: instances with
many parallel edges make the optimal face hugely degenerate, and simplex
iterates hop between face vertices generating thousands of cuts without ever
becoming feasible for the full family.  Central iterates converge in a
handful of rounds; a final simplex solve over the generated rows certifies
the optimality gap (restricted optimum >= true optimum >= feasible iterate).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import CapabilityError, NonConvergenceError, ValidationError
from .graphs import StochasticGraph

DEFAULT_TOL = 1e-8
SEPARATION_TOL = 1e-9

_IPM_OPTIONS = {"run_crossover": "off", "ipm_optimality_tolerance": 1e-12}


def constraint_rhs(p_values) -> float:
    """Probability that at least one of the given edges is realized."""
    out = 1.0
    for p in p_values:
        out *= 1.0 - p
    return 1.0 - out


@dataclass(frozen=True)
class SeparationResult:
    violated: bool
    subset: tuple[int, ...]
    violation: float


def _ranked_prefixes(vertex_edges):
    """Edges sorted by x/p descending (ties by id) with prefix violations."""
    def ratio(item):
        _, p, x = item
        if p > 0:
            return x / p
        return math.inf if x > 0 else -1.0

    ranked = sorted(vertex_edges, key=lambda it: (-ratio(it), it[0]))
    out = []
    sum_x = 0.0
    prod = 1.0
    for k, (_, p, x) in enumerate(ranked, start=1):
        sum_x += x
        prod *= 1.0 - p
        out.append((k, sum_x - (1.0 - prod)))
    return ranked, out


def separate(vertex_edges, tol: float = SEPARATION_TOL) -> SeparationResult:
    """Most violated subset constraint at one vertex, or ``violated=False``.

    ``vertex_edges`` is a sequence of ``(edge_id, p, x)`` triples for the
    edges incident to a single vertex.
    """
    ranked, prefixes = _ranked_prefixes(vertex_edges)
    best = 0.0
    best_k = 0
    for k, viol in prefixes:
        if viol > best:
            best = viol
            best_k = k
    if best > tol:
        subset = tuple(sorted(it[0] for it in ranked[:best_k]))
        return SeparationResult(violated=True, subset=subset, violation=best)
    return SeparationResult(violated=False, subset=(), violation=best)


def violated_prefixes(vertex_edges, tol: float = SEPARATION_TOL):
    """All violated ratio-prefix subsets at one vertex, with the max violation."""
    ranked, prefixes = _ranked_prefixes(vertex_edges)
    subsets = []
    max_violation = 0.0
    for k, viol in prefixes:
        max_violation = max(max_violation, viol)
        if viol > tol:
            subsets.append(tuple(sorted(it[0] for it in ranked[:k])))
    return subsets, max_violation


def brute_force_separate(vertex_edges, tol: float = SEPARATION_TOL) -> SeparationResult:
    """Exhaustive reference oracle (2^deg subsets); degree capped at 20."""
    deg = len(vertex_edges)
    if deg > 20:
        raise CapabilityError(f"brute-force separation capped at degree 20, got {deg}")
    ids = [it[0] for it in vertex_edges]
    p = np.fromiter((it[1] for it in vertex_edges), np.float64, deg)
    x = np.fromiter((it[2] for it in vertex_edges), np.float64, deg)
    n = 1 << deg
    sum_x = np.zeros(n)
    prod = np.ones(n)
    for mask in range(1, n):
        low = mask & -mask
        bit = low.bit_length() - 1
        rest = mask ^ low
        sum_x[mask] = sum_x[rest] + x[bit]
        prod[mask] = prod[rest] * (1.0 - p[bit])
    viol = sum_x - (1.0 - prod)
    viol[0] = 0.0
    best_mask = int(np.argmax(viol))
    best = float(viol[best_mask])
    if best > tol:
        subset = tuple(sorted(ids[b] for b in range(deg) if best_mask >> b & 1))
        return SeparationResult(violated=True, subset=subset, violation=best)
    return SeparationResult(violated=False, subset=(), violation=best)


@dataclass(frozen=True)
class LpSolution:
    """Optimal fractional values plus the constraints generated to get them.

    ``optimality_gap`` bounds the distance to the true optimum: it is the
    difference between the restricted-LP optimum over the generated rows
    (an upper bound) and the returned feasible objective.
    """

    x: np.ndarray
    objective: float
    generated_constraints: tuple[tuple[str, int, tuple[int, ...]], ...]
    tolerance: float
    outer_iterations: int = 0
    optimality_gap: float = 0.0

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "x": [float(v) for v in self.x],
            "constraints": [
                {"vertex_side": side, "vertex": vertex, "edges": list(edges)}
                for side, vertex, edges in self.generated_constraints
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict, tolerance: float = DEFAULT_TOL) -> "LpSolution":
        constraints = tuple(
            (rec["vertex_side"], rec["vertex"], tuple(rec["edges"]))
            for rec in doc.get("constraints", [])
        )
        return cls(
            x=np.asarray(doc["x"], dtype=np.float64),
            objective=float(doc["objective"]),
            generated_constraints=constraints,
            tolerance=tolerance,
        )


def _vertex_groups(g: StochasticGraph):
    """Yield (side, vertex, [(edge_id, p)]) for vertices with incident edges."""
    for side, incidence in (("L", g.left_incidence()), ("R", g.right_incidence())):
        for vertex, ids in enumerate(incidence):
            if ids:
                yield side, vertex, [(e, g.edges[e].p) for e in ids]


def solve_lp(
    g: StochasticGraph,
    tol: float = DEFAULT_TOL,
    separation_tol: float = SEPARATION_TOL,
    initial_constraints=(),
) -> LpSolution:
    """Solve the subset-constrained matching LP by central cutting planes.

    The row pool starts with every vertex's prefix family under the
    p-descending order (cheap, and it usually pins the optimum at once).
    Each round solves the restricted LP at an interior point, then adds all
    violated ratio-prefix subsets found by separation at every vertex; it
    stops at a clean pass, which certifies feasibility of the returned
    iterate for the full constraint family within ``tol``.  The iteration
    cap is ``50 * (n_left + n_right)``; hitting it raises
    NonConvergenceError carrying the last iterate.
    """
    m = g.m
    if m == 0:
        return LpSolution(
            x=np.zeros(0), objective=0.0, generated_constraints=(),
            tolerance=tol, outer_iterations=0,
        )
    p = np.fromiter((e.p for e in g.edges), np.float64, m)
    groups = list(_vertex_groups(g))

    rows: list[tuple[str, int, tuple[int, ...]]] = []
    seen: set[tuple[str, int, tuple[int, ...]]] = set()

    def push(side, vertex, subset):
        key = (side, vertex, tuple(sorted(subset)))
        if key not in seen:
            seen.add(key)
            rows.append(key)
            return 1
        return 0

    for side, vertex, edges in groups:
        prefix: list[int] = []
        for e, _ in sorted(edges, key=lambda it: (-it[1], it[0])):
            prefix.append(e)
            push(side, vertex, prefix)
    for side, vertex, edges in initial_constraints:
        push(side, vertex, edges)

    cost = -np.ones(m)
    bounds = [(0.0, pe) for pe in p]  # singleton constraints as variable bounds
    cap = 50 * (g.n_left + g.n_right)

    def restricted(method, options=None):
        a_ub = np.zeros((len(rows), m))
        b_ub = np.empty(len(rows))
        for i, (_, _, edges) in enumerate(rows):
            a_ub[i, list(edges)] = 1.0
            b_ub[i] = constraint_rhs(g.edges[e].p for e in edges)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=bounds,
                           method=method, options=options)

    x = np.zeros(m)
    iterations = 0
    max_violation = 0.0
    for iterations in range(1, cap + 1):
        res = restricted("highs-ipm", _IPM_OPTIONS)
        if not res.success or res.x is None:
            res = restricted("highs")
        if not res.success:
            raise NonConvergenceError(f"restricted LP solve failed: {res.message}")
        x = np.clip(res.x, 0.0, None)

        added = 0
        max_violation = 0.0
        for side, vertex, edges in groups:
            subsets, vertex_max = violated_prefixes(
                [(e, pe, x[e]) for e, pe in edges], tol=separation_tol
            )
            max_violation = max(max_violation, vertex_max)
            for subset in subsets:
                added += push(side, vertex, subset)
        if max_violation <= tol:
            reference = restricted("highs")
            gap = float(-reference.fun - np.sum(x)) if reference.success else math.nan
            return LpSolution(
                x=x,
                objective=float(np.sum(x)),
                generated_constraints=tuple(rows),
                tolerance=tol,
                outer_iterations=iterations,
                optimality_gap=gap,
            )
        if added == 0:
            break  # all violated subsets already present: solver noise, no progress
    raise NonConvergenceError(
        f"cutting-plane loop stopped after {iterations} iterations "
        f"(max violation {max_violation:.3g})",
        last_solution=LpSolution(
            x=x, objective=float(np.sum(x)), generated_constraints=tuple(rows),
            tolerance=tol, outer_iterations=iterations,
        ),
    )


def solve_lp_bruteforce(g: StochasticGraph, max_degree: int = 16) -> float:
    """Reference LP optimum with every subset constraint materialized."""
    m = g.m
    if m == 0:
        return 0.0
    rows = []
    rhs = []
    for _, _, edges in _vertex_groups(g):
        deg = len(edges)
        if deg > max_degree:
            raise CapabilityError(f"vertex degree {deg} exceeds cap {max_degree}")
        for mask in range(1, 1 << deg):
            chosen = [edges[b] for b in range(deg) if mask >> b & 1]
            row = np.zeros(m)
            row[[e for e, _ in chosen]] = 1.0
            rows.append(row)
            rhs.append(constraint_rhs(pe for _, pe in chosen))
    res = linprog(
        -np.ones(m), A_ub=np.array(rows), b_ub=np.array(rhs),
        bounds=[(0.0, None)] * m, method="highs",
    )
    if not res.success:
        raise NonConvergenceError(f"reference LP solve failed: {res.message}")
    return float(-res.fun)


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    violations: tuple[tuple[str, int, tuple[int, ...], float], ...] = field(default=())


def verify_feasible(
    g: StochasticGraph,
    x,
    mode: str = "oracle",
    max_degree_for_bruteforce: int = 16,
    tol: float = SEPARATION_TOL,
) -> FeasibilityReport:
    """Check ``x`` against the full subset constraint family.

    ``oracle`` mode reports the most violated subset per vertex; ``bruteforce``
    mode enumerates all subsets per vertex (degree capped) and reports every
    violating one.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (g.m,):
        raise ValidationError(f"x must have length {g.m}")
    if mode not in ("oracle", "bruteforce"):
        raise ValidationError(f"unknown mode {mode!r}")
    violations = []
    for side, vertex, edges in _vertex_groups(g):
        triples = [(e, pe, x[e]) for e, pe in edges]
        if mode == "oracle":
            result = separate(triples, tol=tol)
            if result.violated:
                violations.append((side, vertex, result.subset, result.violation))
        else:
            deg = len(triples)
            if deg > max_degree_for_bruteforce:
                raise CapabilityError(
                    f"{side}{vertex}: degree {deg} exceeds brute-force cap "
                    f"{max_degree_for_bruteforce}"
                )
            ids = [t[0] for t in triples]
            for mask in range(1, 1 << deg):
                chosen = [triples[b] for b in range(deg) if mask >> b & 1]
                viol = sum(t[2] for t in chosen) - constraint_rhs(t[1] for t in chosen)
                if viol > tol:
                    subset = tuple(sorted(ids[b] for b in range(deg) if mask >> b & 1))
                    violations.append((side, vertex, subset, viol))
    return FeasibilityReport(feasible=not violations, violations=tuple(violations))


def exact_match_probabilities(g: StochasticGraph, max_edges: int = 22) -> np.ndarray:
    """Per-edge probability of belonging to the canonical maximum matching.

    Enumerates all 2^m realizations (m capped), finds for each the
    lexicographically smallest maximum matching by edge ids, and accumulates
    probabilities.  The result sums to the exact expected maximum matching
    size and is feasible for the subset-constraint LP.
    """
    m = g.m
    if m > max_edges:
        raise CapabilityError(f"exact enumeration capped at {max_edges} edges, got {m}")
    out = np.zeros(m)
    if m == 0:
        return out
    eu = [e.u for e in g.edges]
    ev = [e.v for e in g.edges]
    p = [e.p for e in g.edges]

    for mask in range(1 << m):
        prob = 1.0
        realized = []
        for e in range(m):
            if mask >> e & 1:
                prob *= p[e]
                realized.append(e)
            else:
                prob *= 1.0 - p[e]
        if prob == 0.0 or not realized:
            continue
        chosen = _canonical_max_matching(realized, eu, ev)
        for e in chosen:
            out[e] += prob
    return out


def _canonical_max_matching(realized, eu, ev):
    """Lexicographically smallest maximum matching of a realized edge list.

    Greedy by ascending edge id: take an edge iff taking it preserves the
    maximum matching size of the remainder.
    """
    n = len(realized)
    memo: dict[tuple[int, int, int], int] = {}

    def best(i: int, ml: int, mr: int) -> int:
        if i == n:
            return 0
        key = (i, ml, mr)
        val = memo.get(key)
        if val is not None:
            return val
        e = realized[i]
        val = best(i + 1, ml, mr)
        ub, vb = 1 << eu[e], 1 << ev[e]
        if not (ml & ub) and not (mr & vb):
            val = max(val, 1 + best(i + 1, ml | ub, mr | vb))
        memo[key] = val
        return val

    chosen = []
    ml = mr = 0
    for i in range(n):
        e = realized[i]
        ub, vb = 1 << eu[e], 1 << ev[e]
        if not (ml & ub) and not (mr & vb):
            if 1 + best(i + 1, ml | ub, mr | vb) >= best(i, ml, mr):
                chosen.append(e)
                ml |= ub
                mr |= vb
    return chosen
