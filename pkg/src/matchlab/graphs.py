"""Stochastic bipartite multigraphs, instance generators, and instance I/O.

An instance is a bipartite multigraph where edge ``e`` exists independently
with probability ``p_e``.  Each edge also carries its log-normalized weight
``w_e = -ln(1 - p_e)`` (``+inf`` for certain edges); log-weights are the
additive currency of the package: splitting an edge into parallel pieces
whose weights sum to the original preserves the chance that at least one
piece exists.  The listed edge order is the canonical default arrival order.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DomainError,
    ParseError,
    UnsplittableEdgeError,
    ValidationError,
)

#: Matching tolerance between stored p and w (see EdgeSpec).
_PW_TOL = 1e-12


def log_weight(p: float) -> float:
    """Log-normalized weight ``-ln(1-p)``; ``+inf`` at p = 1.

    Raises DomainError outside [0, 1].
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability must lie in [0, 1], got {p!r}")
    if p == 1.0:
        return math.inf
    return -math.log1p(-p)


def prob_from_weight(w: float) -> float:
    """Inverse of :func:`log_weight`: ``1 - e^{-w}``."""
    if w < 0:
        raise DomainError(f"log-weight must be nonnegative, got {w!r}")
    return -math.expm1(-w)


@dataclass(frozen=True)
class EdgeSpec:
    """One edge: endpoints, existence probability, log-normalized weight."""

    id: int
    u: int
    v: int
    p: float
    w: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValidationError(f"edge {self.id}: p={self.p!r} outside [0, 1]")
        if self.p == 1.0:
            if not math.isinf(self.w):
                raise ValidationError(f"edge {self.id}: p=1 requires w=+inf")
        elif abs(self.p - (-math.expm1(-self.w))) > _PW_TOL:
            raise ValidationError(
                f"edge {self.id}: w={self.w!r} inconsistent with p={self.p!r}"
            )


@dataclass(frozen=True)
class StochasticGraph:
    """Immutable bipartite multigraph with independent edge probabilities.

    Edge ids are dense in [0, m) and equal each edge's list position; the
    listed order is the default arrival order.  Parallel edges are allowed.
    """

    n_left: int
    n_right: int
    edges: tuple[EdgeSpec, ...]

    def __post_init__(self):
        if self.n_left < 0 or self.n_right < 0:
            raise ValidationError("vertex counts must be nonnegative")
        for pos, e in enumerate(self.edges):
            if e.id != pos:
                raise ValidationError(f"edge ids must be dense: position {pos} has id {e.id}")
            if not (0 <= e.u < self.n_left):
                raise ValidationError(f"edge {pos}: left endpoint {e.u} out of range")
            if not (0 <= e.v < self.n_right):
                raise ValidationError(f"edge {pos}: right endpoint {e.v} out of range")

    @classmethod
    def from_pairs(
        cls, n_left: int, n_right: int, pairs: Iterable[tuple[int, int, float]]
    ) -> "StochasticGraph":
        """Build from ``(u, v, p)`` triples; ids and weights are derived."""
        edges = tuple(
            EdgeSpec(id=i, u=u, v=v, p=float(p), w=log_weight(float(p)))
            for i, (u, v, p) in enumerate(pairs)
        )
        return cls(n_left=n_left, n_right=n_right, edges=edges)

    @property
    def m(self) -> int:
        return len(self.edges)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(u, v, p, w) as numpy arrays in edge-id order."""
        u = np.fromiter((e.u for e in self.edges), np.int64, self.m)
        v = np.fromiter((e.v for e in self.edges), np.int64, self.m)
        p = np.fromiter((e.p for e in self.edges), np.float64, self.m)
        w = np.fromiter((e.w for e in self.edges), np.float64, self.m)
        return u, v, p, w

    def left_incidence(self) -> list[list[int]]:
        """Edge ids per left vertex, in arrival (listed) order."""
        inc: list[list[int]] = [[] for _ in range(self.n_left)]
        for e in self.edges:
            inc[e.u].append(e.id)
        return inc

    def right_incidence(self) -> list[list[int]]:
        inc: list[list[int]] = [[] for _ in range(self.n_right)]
        for e in self.edges:
            inc[e.v].append(e.id)
        return inc


# A realization is a boolean vector over edge ids (True = edge exists).
Realization = np.ndarray


def split_edge(
    g: StochasticGraph, edge_id: int, fractions: Sequence[float]
) -> StochasticGraph:
    """Replace an edge by consecutive parallel edges with the given weights.

    ``fractions`` must be positive and sum to the edge's log-weight (within
    1e-9), which preserves the probability that at least one piece exists.
    The pieces sit at the original edge's position in the listed order.
    """
    if not 0 <= edge_id < g.m:
        raise ValidationError(f"no edge with id {edge_id}")
    old = g.edges[edge_id]
    if old.p == 1.0:
        raise UnsplittableEdgeError(
            f"edge {edge_id} has p=1 (infinite log-weight) and cannot be split"
        )
    fr = [float(f) for f in fractions]
    if not fr or any(f <= 0 for f in fr):
        raise ValidationError("fractions must be positive")
    if abs(sum(fr) - old.w) > 1e-9:
        raise ValidationError(
            f"fractions sum to {sum(fr)!r}, expected edge weight {old.w!r}"
        )
    pairs: list[tuple[int, int, float]] = []
    for e in g.edges:
        if e.id == edge_id:
            pairs.extend((old.u, old.v, prob_from_weight(f)) for f in fr)
        else:
            pairs.append((e.u, e.v, e.p))
    return StochasticGraph.from_pairs(g.n_left, g.n_right, pairs)


def gen_fig1_regular(n: int, eps: float, *, allow_certain: bool = False) -> StochasticGraph:
    """Hard instance for plain greedy on log-regular graphs.

    Sides have 2n+1 vertices: a block of n+1 "diagonal" vertices on each
    side joined by n+1 red edges (u_i, v_i), plus n extra vertices per side;
    every cross pair (extra-left x diagonal-right and diagonal-left x
    extra-right) carries an edge.  All probabilities are 1-eps, so every
    vertex has n+1 incident edges and common log-degree (n+1)*(-ln eps).
    Red edges are listed first; the cross edges follow in construction order
    (extra-left rows, then diagonal-left rows).
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    if not (0.0 < eps < 1.0) and not (allow_certain and eps == 0.0):
        raise ValidationError(
            "eps must lie in (0, 1); eps=0 (certain edges) requires allow_certain=True"
        )
    p = 1.0 - eps
    side = 2 * n + 1
    # left: 0..n are diagonal (n+1 of them), n+1..2n are extra; right alike
    pairs: list[tuple[int, int, float]] = []
    for i in range(n + 1):
        pairs.append((i, i, p))
    for i in range(n):  # extra-left x diagonal-right
        for j in range(n + 1):
            pairs.append((n + 1 + i, j, p))
    for i in range(n + 1):  # diagonal-left x extra-right
        for j in range(n):
            pairs.append((i, n + 1 + j, p))
    return StochasticGraph.from_pairs(side, side, pairs)


def gen_fig2_hardness(n: int) -> StochasticGraph:
    """Hard instance separating online algorithms from the offline optimum.

    2n vertices per side.  Type-1 edges: the complete n x n block between
    the first halves, p=1, listed first.  Type-2: (u_i, v'_i) with p=1/2.
    Type-3: (u'_i, v_i) with p=1/2.  Total n^2 + 2n edges.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    pairs: list[tuple[int, int, float]] = []
    for i in range(n):
        for j in range(n):
            pairs.append((i, j, 1.0))
    for i in range(n):
        pairs.append((i, n + i, 0.5))
    for i in range(n):
        pairs.append((n + i, i, 0.5))
    return StochasticGraph.from_pairs(2 * n, 2 * n, pairs)


def gen_complete_uniform(n: int) -> StochasticGraph:
    """Complete bipartite K_{n,n} with every edge probability 1/n."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    return complete_graph(n, 1.0 / n)


def complete_graph(n: int, p: float) -> StochasticGraph:
    """K_{n,n} with uniform edge probability ``p`` (row-major edge order)."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    pairs = [(i, j, p) for i in range(n) for j in range(n)]
    return StochasticGraph.from_pairs(n, n, pairs)


def gen_random(
    n_left: int,
    n_right: int,
    m: int,
    p_min: float,
    p_max: float,
    seed: int,
) -> StochasticGraph:
    """Random test instance: endpoints uniform, p uniform in [p_min, p_max]."""
    if n_left < 1 or n_right < 1:
        raise ValidationError("vertex counts must be >= 1")
    if m < 0:
        raise ValidationError("m must be >= 0")
    if not (0.0 <= p_min <= p_max <= 1.0):
        raise ValidationError("need 0 <= p_min <= p_max <= 1")
    rng = random.Random(seed)
    pairs = [
        (rng.randrange(n_left), rng.randrange(n_right), rng.uniform(p_min, p_max))
        for _ in range(m)
    ]
    return StochasticGraph.from_pairs(n_left, n_right, pairs)


@dataclass(frozen=True)
class RegularityReport:
    """Outcome of a log-degree regularity check."""

    ok: bool
    c: float
    tol: float
    left_degrees: np.ndarray
    right_degrees: np.ndarray

    @property
    def max_deviation(self) -> float:
        devs = [
            float(np.max(np.abs(d - self.c))) if d.size else 0.0
            for d in (self.left_degrees, self.right_degrees)
        ]
        return max(devs)


def regularity_check(g: StochasticGraph, c: float, tol: float = 1e-9) -> RegularityReport:
    """True iff every vertex's summed log-weight is within ``tol`` of ``c``.

    Requires all weights finite (no p=1 edges).
    """
    left = np.zeros(g.n_left)
    right = np.zeros(g.n_right)
    for e in g.edges:
        if math.isinf(e.w):
            raise ValidationError(
                f"edge {e.id} has p=1; regularity is defined for finite log-weights only"
            )
        left[e.u] += e.w
        right[e.v] += e.w
    ok = bool(
        (g.n_left == 0 or np.max(np.abs(left - c)) <= tol)
        and (g.n_right == 0 or np.max(np.abs(right - c)) <= tol)
    )
    return RegularityReport(ok=ok, c=c, tol=tol, left_degrees=left, right_degrees=right)


def graph_to_dict(g: StochasticGraph) -> dict:
    return {
        "n_left": g.n_left,
        "n_right": g.n_right,
        "edges": [{"u": e.u, "v": e.v, "p": e.p} for e in g.edges],
    }


def graph_from_dict(doc: dict) -> StochasticGraph:
    if not isinstance(doc, dict):
        raise ParseError(f"instance document must be an object, got {type(doc).__name__}")
    for field in ("n_left", "n_right", "edges"):
        if field not in doc:
            raise ParseError(f"missing field {field!r}")
    n_left, n_right, edges = doc["n_left"], doc["n_right"], doc["edges"]
    if not isinstance(n_left, int) or not isinstance(n_right, int):
        raise ParseError("fields 'n_left'/'n_right' must be integers")
    if not isinstance(edges, list):
        raise ParseError("field 'edges' must be a list")
    pairs = []
    for i, rec in enumerate(edges):
        if not isinstance(rec, dict):
            raise ParseError(f"edges[{i}]: expected an object")
        try:
            u, v, p = rec["u"], rec["v"], rec["p"]
        except KeyError as exc:
            raise ParseError(f"edges[{i}]: missing field {exc.args[0]!r}") from None
        if not isinstance(u, int) or not isinstance(v, int):
            raise ParseError(f"edges[{i}]: endpoints must be integers")
        if not isinstance(p, (int, float)):
            raise ParseError(f"edges[{i}]: p must be a number")
        if not 0.0 <= float(p) <= 1.0:
            raise ValidationError(f"edges[{i}].p: {p!r} outside [0, 1]")
        pairs.append((u, v, float(p)))
    try:
        return StochasticGraph.from_pairs(n_left, n_right, pairs)
    except ValidationError as exc:
        raise ValidationError(f"invalid instance: {exc}") from exc


def write_instance(g: StochasticGraph, path: str | Path) -> None:
    """Write the JSON instance document (probabilities at full precision)."""
    Path(path).write_text(json.dumps(graph_to_dict(g), indent=1) + "\n", encoding="utf-8")


def read_instance(path: str | Path) -> StochasticGraph:
    """Read a JSON instance document; errors carry line/field context."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return graph_from_dict(doc)
    except (ParseError, ValidationError) as exc:
        raise type(exc)(f"{path}: {exc}") from exc
