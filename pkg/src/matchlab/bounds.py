"""Numerical verification of the bound functions behind the guarantees.

Four scalar functions certify the competitive-ratio arguments: ``h1`` (the
regular-graph integral bound), ``h2`` (the two-phase bound for pruned general
graphs, minimized over its domain), ``h3`` (nonnegativity certifies the
subdivision step of the refined analysis), and ``h4`` (nonnegativity
certifies the quadratic slack of the second-order term).  All are evaluated
with composite Gauss-Legendre quadrature and dense grids; reported error
estimates come from doubling the quadrature order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import CapabilityError, DomainError, InfeasibleBoundError, ValidationError


@lru_cache(maxsize=None)
def _gl_nodes(points: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights transformed to [0, 1]."""
    xs, ws = np.polynomial.legendre.leggauss(points)
    return (xs + 1.0) / 2.0, ws / 2.0


def _integral_01(f, points: int) -> float:
    nodes, weights = _gl_nodes(points)
    return float(np.dot(f(nodes), weights))


class QuadResult(NamedTuple):
    value: float
    error: float


def h1(c: float, quad_points: int = 64) -> QuadResult:
    """Integral bound for log-regular graphs: ``int_0^1 1-e^{-c e^{-cz}} dz``.

    The error estimate is the change under doubling the quadrature order.
    """
    if not c > 0:
        raise DomainError("c must be positive")

    def integrand(z):
        return 1.0 - np.exp(-c * np.exp(-c * z))

    coarse = _integral_01(integrand, quad_points)
    fine = _integral_01(integrand, 2 * quad_points)
    return QuadResult(value=fine, error=abs(fine - coarse))


@dataclass(frozen=True)
class BoundReport:
    """Result of a bound-function minimization or grid check."""

    function_id: str
    c: float
    grid: str
    min_value: float
    argmin: tuple[float, ...]
    quadrature_error: float
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "function_id": self.function_id,
            "c": self.c,
            "grid": self.grid,
            "min_value": self.min_value,
            "argmin": list(self.argmin),
            "quadrature_error": self.quadrature_error,
            **{k: v for k, v in self.extras.items()},
        }


def _h2_batch(s: np.ndarray, t: np.ndarray, c: float, points: int) -> np.ndarray:
    """Vectorized h2 over paired (s, t) arrays (domain already validated)."""
    nodes, weights = _gl_nodes(points)
    z1 = s[:, None] * nodes[None, :]
    part1 = s * ((1.0 - np.exp(-c * np.exp(-c * z1))) @ weights)
    z2 = t[:, None] * nodes[None, :]
    one_minus_t = (1.0 - t)[:, None]
    g2 = 1.0 - np.exp(-np.exp(-c * s)[:, None] * one_minus_t / (one_minus_t + z2) ** 2)
    part2 = t * (g2 @ weights)
    return (part1 + part2) / (s + t)


def _h2_domain(c: float) -> float:
    if not c > 1:
        raise DomainError("h2 requires c > 1 (the t-range [0, 1-1/c] is empty otherwise)")
    return 1.0 - 1.0 / c


def h2(s: float, t: float, c: float, points: int = 64) -> float:
    """Two-phase ratio bound at one point of its domain.

    Domain: ``s in [0, 1]``, ``t in [0, 1-1/c]``, ``s + t in (0, 1]``.
    """
    t_max = _h2_domain(c)
    if not (0.0 <= s <= 1.0 and 0.0 <= t <= t_max + 1e-15 and 0.0 < s + t <= 1.0 + 1e-15):
        raise DomainError(f"(s, t) = ({s}, {t}) outside the h2 domain at c={c}")
    return float(_h2_batch(np.array([s]), np.array([t]), c, points)[0])


def h2_min(
    c: float,
    grid_resolution: int = 400,
    refine_levels: int = 3,
    points: int = 64,
) -> BoundReport:
    """Minimize h2 over its domain: dense grid plus local refinement.

    Refinement re-grids a one-cell neighborhood of the incumbent argmin at
    each level; ``extras['cell']`` reports the final cell diameter per axis.
    """
    t_max = _h2_domain(c)

    def grid_min(s_lo, s_hi, t_lo, t_hi, ns, nt):
        svals = np.linspace(s_lo, s_hi, ns)
        tvals = np.linspace(t_lo, t_hi, nt)
        ss, tt = np.meshgrid(svals, tvals, indexing="ij")
        s_flat = ss.ravel()
        t_flat = tt.ravel()
        mask = (s_flat + t_flat > 1e-12) & (s_flat + t_flat <= 1.0 + 1e-12)
        vals = np.full(s_flat.shape, np.inf)
        if np.any(mask):
            vals[mask] = _h2_batch(s_flat[mask], t_flat[mask], c, points)
        idx = int(np.argmin(vals))
        steps = (
            (s_hi - s_lo) / max(ns - 1, 1),
            (t_hi - t_lo) / max(nt - 1, 1),
        )
        return float(vals[idx]), float(s_flat[idx]), float(t_flat[idx]), steps

    best, s_star, t_star, steps = grid_min(0.0, 1.0, 0.0, t_max, grid_resolution, grid_resolution)
    for _ in range(refine_levels):
        s_lo = max(0.0, s_star - steps[0])
        s_hi = min(1.0, s_star + steps[0])
        t_lo = max(0.0, t_star - steps[1])
        t_hi = min(t_max, t_star + steps[1])
        best, s_star, t_star, steps = grid_min(s_lo, s_hi, t_lo, t_hi, 41, 41)

    fine = float(_h2_batch(np.array([s_star]), np.array([t_star]), c, 2 * points)[0])
    return BoundReport(
        function_id="h2",
        c=c,
        grid=f"{grid_resolution}x{grid_resolution}+{refine_levels} refinements",
        min_value=best,
        argmin=(s_star, t_star),
        quadrature_error=abs(fine - best),
        extras={"cell": list(steps)},
    )


def h2_grid(c: float, resolution: int = 100, points: int = 64):
    """(s, t, value) arrays over the h2 domain for external plotting."""
    t_max = _h2_domain(c)
    svals = np.linspace(0.0, 1.0, resolution)
    tvals = np.linspace(0.0, t_max, resolution)
    ss, tt = np.meshgrid(svals, tvals, indexing="ij")
    s_flat, t_flat = ss.ravel(), tt.ravel()
    mask = (s_flat + t_flat > 1e-12) & (s_flat + t_flat <= 1.0 + 1e-12)
    vals = np.full(s_flat.shape, np.nan)
    vals[mask] = _h2_batch(s_flat[mask], t_flat[mask], c, points)
    return s_flat, t_flat, vals


_QY_GUARD = 1.0 - 1e-15


def _h3_batch(x: np.ndarray, q: np.ndarray, c: float) -> np.ndarray:
    y = -np.expm1(-c * x)
    qy = np.minimum(q * y, _QY_GUARD)
    # (1-qy)^{1/x} as exp(log1p(-qy)/x) for stability at small x
    term = x * (np.exp(-qy / x) - np.exp(np.log1p(-qy) / x))
    penalty = math.exp(-c - c * math.exp(-c)) * (-np.log1p(-y) - y) * q
    return term - penalty


def h3(x: float, q: float, c: float) -> float:
    """Subdivision gain-minus-loss at one point.

    Domain: ``x in (0, 1]`` and ``q in [e^{-c+cx}, 1]``; ``y = 1-e^{-cx}``.
    Nonnegativity over the domain certifies that batching parallel edges
    never hides a loss; the bound is tight as ``x -> 0``.
    """
    if not (0.0 < x <= 1.0):
        raise DomainError(f"x={x} outside (0, 1]")
    q_lo = math.exp(-c + c * x)
    if not (q_lo - 1e-12 <= q <= 1.0 + 1e-12):
        raise DomainError(f"q={q} outside [{q_lo}, 1] at x={x}")
    return float(_h3_batch(np.array([x]), np.array([q]), c)[0])


def h3_grid_check(
    c: float,
    nx: int = 200,
    nq: int = 200,
    x_min: float = 1e-3,
) -> BoundReport:
    """Grid minimum of h3: x log-spaced in [x_min, 1], q linear per column.

    ``extras['boundary_min']`` is the minimum over the smallest-x column,
    where the bound is expected to be tight.
    """
    xs = np.logspace(math.log10(x_min), 0.0, nx)
    best = math.inf
    best_pt = (math.nan, math.nan)
    boundary_min = math.inf
    for i, xv in enumerate(xs):
        qlo = math.exp(-c + c * xv)
        qs = np.linspace(qlo, 1.0, nq)
        vals = _h3_batch(np.full(nq, xv), qs, c)
        j = int(np.argmin(vals))
        if vals[j] < best:
            best = float(vals[j])
            best_pt = (float(xv), float(qs[j]))
        if i == 0:
            boundary_min = float(np.min(vals))
    return BoundReport(
        function_id="h3",
        c=c,
        grid=f"{nx} log x [{x_min},1] x {nq} linear q",
        min_value=best,
        argmin=best_pt,
        quadrature_error=0.0,
        extras={"boundary_min": boundary_min},
    )


def h3_grid(c: float, nx: int = 100, nq: int = 100, x_min: float = 1e-3):
    xs = np.logspace(math.log10(x_min), 0.0, nx)
    out_x, out_q, out_v = [], [], []
    for xv in xs:
        qlo = math.exp(-c + c * xv)
        qs = np.linspace(qlo, 1.0, nq)
        vals = _h3_batch(np.full(nq, xv), qs, c)
        out_x.append(np.full(nq, xv))
        out_q.append(qs)
        out_v.append(vals)
    return np.concatenate(out_x), np.concatenate(out_q), np.concatenate(out_v)


def _h4_batch(delta: np.ndarray, c: float) -> np.ndarray:
    ec = math.exp(-c)
    base = ec + delta
    power = np.exp(np.log(base) / (1.0 - ec) + c * ec / (1.0 - ec))
    return power * (math.exp(c) - 1.0) - math.exp(c) * base + ec - 1.98 * delta**2


def h4(delta: float, c: float) -> float:
    """Second-order slack at one point; domain ``0 <= delta <= 1 - e^{-c}``."""
    if not (0.0 <= delta <= 1.0 - math.exp(-c) + 1e-12):
        raise DomainError(f"delta={delta} outside [0, 1-e^-{c}]")
    return float(_h4_batch(np.array([delta]), c)[0])


def h4_range_check(c: float, n_points: int = 10_000) -> BoundReport:
    """Grid minimum of h4 over its full delta range."""
    deltas = np.linspace(0.0, 1.0 - math.exp(-c), n_points)
    vals = _h4_batch(deltas, c)
    idx = int(np.argmin(vals))
    return BoundReport(
        function_id="h4",
        c=c,
        grid=f"{n_points} linear points",
        min_value=float(vals[idx]),
        argmin=(float(deltas[idx]),),
        quadrature_error=0.0,
        extras={"value_at_zero": float(_h4_batch(np.array([0.0]), c)[0])},
    )


def h4_grid(c: float, n_points: int = 200):
    deltas = np.linspace(0.0, 1.0 - math.exp(-c), n_points)
    return deltas, _h4_batch(deltas, c)


@dataclass(frozen=True)
class DeltaBound:
    """Largest admissible average slack and the implied matched fraction."""

    delta_max: float
    ratio: float
    linear_budget: float
    quad_coefficient: float


def solve_delta_bound(
    c: float,
    coeff: float,
    h1_value: float | None = None,
    quad_points: int = 64,
) -> DeltaBound:
    """Largest ``D >= 0`` with ``D + coeff*e^{-c-ce^{-c}}*D^2 <= 1-e^{-c}-h1(c)``.

    ``h1_value`` overrides the quadrature value of h1(c) (testing hook).
    Returns the root (bisection to 1e-10) and ``ratio = 1-e^{-c}-D``.
    """
    if not c > 0:
        raise DomainError("c must be positive")
    if coeff < 0:
        raise DomainError("coeff must be nonnegative")
    budget = 1.0 - math.exp(-c) - (h1(c, quad_points).value if h1_value is None else h1_value)
    quad_coef = coeff * math.exp(-c - c * math.exp(-c))
    if budget < 0:
        raise InfeasibleBoundError(
            f"no nonnegative solution: budget {budget:.6g} is negative"
        )
    if quad_coef == 0.0:
        delta = budget
    else:
        def g(d):
            return d + quad_coef * d * d - budget

        lo, hi = 0.0, max(budget, 1.0)
        while g(hi) < 0:
            hi *= 2.0
        while hi - lo > 1e-10:
            mid = 0.5 * (lo + hi)
            if g(mid) <= 0:
                lo = mid
            else:
                hi = mid
        delta = 0.5 * (lo + hi)
    return DeltaBound(
        delta_max=delta,
        ratio=1.0 - math.exp(-c) - delta,
        linear_budget=budget,
        quad_coefficient=quad_coef,
    )


@dataclass(frozen=True)
class WorstCaseInstance:
    """Closed-form minimizer structure of the per-vertex contribution problem.

    ``k`` edges with common fractional value ``x = 1/k``; the first ``ell``
    edges are certain (p=1) with pruned probability ``c*x``, the tail keeps
    ``p_i = x / (1 - (k-i)x)`` which makes every suffix constraint tight.
    """

    k: int
    ell: int
    c: float
    x: float
    p: np.ndarray
    y: np.ndarray
    q: np.ndarray
    objective: float

    def suffix_slacks(self) -> np.ndarray:
        """Per-suffix constraint slack: rhs - lhs for S = {j..k}, all j."""
        rev_prod = np.cumprod((1.0 - self.p)[::-1])[::-1]
        sizes = self.k - np.arange(self.k)
        return (1.0 - rev_prod) - sizes * self.x


def build_worst_case(k: int, ell: int, c: float) -> WorstCaseInstance:
    """Instantiate the closed-form worst-case structure with ``x = 1/k``.

    Requires ``c < k`` (so the capped probability ``c*x`` is below 1) and a
    cutoff consistent with nonincreasing pruned probabilities; infeasible
    parameters raise ValidationError.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    if not 0 <= ell <= k:
        raise ValidationError("need 0 <= ell <= k")
    if not c > 0:
        raise ValidationError("c must be positive")
    if c >= k:
        raise ValidationError(f"need c < k so that c/k < 1, got c={c}, k={k}")
    x = 1.0 / k
    idx = np.arange(1, k + 1)
    p = np.empty(k)
    y = np.empty(k)
    p[:ell] = 1.0
    y[:ell] = c * x
    tail = idx[ell:]
    p[ell:] = x / (1.0 - (k - tail) * x)
    y[ell:] = p[ell:]
    if np.any(p <= 0.0) or np.any(p > 1.0 + 1e-12):
        raise ValidationError("infeasible parameters: probabilities leave (0, 1]")
    if np.any(np.diff(y) > 1e-12):
        raise ValidationError(
            f"infeasible parameters: pruned probabilities increase at the cutoff "
            f"(ell={ell} too small for c={c}, k={k})"
        )
    q = np.empty(k)
    q[:ell] = (1.0 - c * x) ** (idx[:ell] - 1)
    q[ell:] = (
        (1.0 - c * x) ** ell
        * (1.0 - (k - ell) * x)
        / (1.0 - (k - tail + 1) * x)
    )
    objective = float(np.mean(1.0 - np.exp(-q * y / x)))
    inst = WorstCaseInstance(k=k, ell=ell, c=c, x=x, p=p, y=y, q=q, objective=objective)
    slacks = inst.suffix_slacks()
    if ell < k and np.any(np.abs(slacks[ell:]) > 1e-9):
        raise ValidationError("suffix constraints failed to be tight (numerical issue)")
    return inst


def brute_force_opt_problem(
    k: int,
    c: float,
    grid_resolution: int = 12,
) -> BoundReport:
    """Grid-search the per-vertex contribution minimization directly.

    Variables are ``k`` probabilities and ``k`` fractional values on (0, 1]
    grids, subject to every subset constraint
    ``sum_{i in S} x_i <= 1 - prod_{i in S}(1 - p_i)``; the objective is
    ``sum_i x_i (1 - e^{-q_i y_i / x_i}) / sum_i x_i`` with
    ``y_i = min(p_i, 1 - e^{-c x_i})`` and ``q_i = prod_{j<i} (1 - y_j)``.
    Every grid point is feasible for the continuous problem, so the grid
    minimum can only overestimate the true minimum.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    if k > 4:
        raise CapabilityError("brute-force search capped at k = 4")
    res = grid_resolution
    values = np.linspace(1.0 / res, 1.0, res)
    x_rows = np.array(list(itertools.product(values, repeat=k)))  # (res^k, k)
    subsets = [
        [i for i in range(k) if mask >> i & 1] for mask in range(1, 1 << k)
    ]
    subset_x_sums = [x_rows[:, s].sum(axis=1) for s in subsets]

    best = math.inf
    best_pt: tuple[float, ...] = ()
    for p_tuple in itertools.product(values, repeat=k):
        p_arr = np.array(p_tuple)
        feasible = np.ones(len(x_rows), dtype=bool)
        for s, sums in zip(subsets, subset_x_sums):
            rhs = 1.0 - np.prod(1.0 - p_arr[s])
            feasible &= sums <= rhs + 1e-12
        if not np.any(feasible):
            continue
        xs = x_rows[feasible]
        ys = np.minimum(p_arr[None, :], -np.expm1(-c * xs))
        qs = np.ones_like(xs)
        qs[:, 1:] = np.cumprod(1.0 - ys[:, :-1], axis=1)
        obj = np.sum(xs * (1.0 - np.exp(-qs * ys / xs)), axis=1) / np.sum(xs, axis=1)
        j = int(np.argmin(obj))
        if obj[j] < best:
            best = float(obj[j])
            best_pt = tuple(p_tuple) + tuple(float(v) for v in xs[j])
    return BoundReport(
        function_id="opt_problem",
        c=c,
        grid=f"k={k}, {res} values per axis",
        min_value=best,
        argmin=best_pt,
        quadrature_error=0.0,
    )
