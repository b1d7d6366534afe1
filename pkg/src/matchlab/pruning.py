"""Probability pruning, regular-graph fractions, and parallel-edge batching.

Pruning reduces each edge's existence probability from ``p_e`` to
``y_e = min(p_e, 1 - e^{-c*x_e})`` where ``x_e`` comes from the matching LP
(or from the regular-graph normalization ``x_e = w_e / c``).  Simulators then
realize edges at rate ``y_e`` directly, which is distributionally identical
to realizing at ``p_e`` and independently dropping to ``y_e``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graphs import StochasticGraph, regularity_check


@dataclass(frozen=True)
class PrunedGraph:
    """A graph plus the pruned probabilities ``y`` and LP values ``x`` used."""

    base: StochasticGraph
    y: np.ndarray
    x: np.ndarray
    c: float

    def __post_init__(self):
        m = self.base.m
        if len(self.y) != m or len(self.x) != m:
            raise ValidationError("x and y must have one entry per edge")
        if np.any(self.x < 0):
            raise ValidationError("x must be nonnegative")
        p = np.fromiter((e.p for e in self.base.edges), np.float64, m)
        target = np.minimum(p, -np.expm1(-self.c * self.x))
        if np.any(np.abs(self.y - target) > 1e-12):
            raise ValidationError("y must equal min(p, 1 - exp(-c*x)) within 1e-12")

    @property
    def m(self) -> int:
        return self.base.m

    def drop_probabilities(self) -> np.ndarray:
        """Per-edge probability that a realized arrival is dropped: 1 - y/p."""
        p = np.fromiter((e.p for e in self.base.edges), np.float64, self.m)
        out = np.zeros(self.m)
        pos = p > 0
        out[pos] = 1.0 - self.y[pos] / p[pos]
        return out


def prune(g: StochasticGraph, x, c: float) -> PrunedGraph:
    """Reduce probabilities to ``y_e = min(p_e, 1 - e^{-c*x_e})``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (g.m,):
        raise ValidationError(f"x must have length {g.m}, got shape {x.shape}")
    if np.any(x < 0):
        raise ValidationError("x must be nonnegative")
    if not c > 0:
        raise ValidationError("c must be positive")
    p = np.fromiter((e.p for e in g.edges), np.float64, g.m)
    y = np.minimum(p, -np.expm1(-c * x))
    return PrunedGraph(base=g, y=y, x=x, c=c)


def regular_xy(g: StochasticGraph, c: float, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Fractions for a log-regular graph: ``x_e = w_e/c`` and ``y_e = p_e``.

    Requires the graph to pass :func:`regularity_check` at ``c``; then the
    ``x`` values sum to 1 at every vertex.
    """
    report = regularity_check(g, c, tol)
    if not report.ok:
        raise ValidationError(
            f"graph is not log-{c}-regular (max deviation {report.max_deviation:.3g})"
        )
    w = np.fromiter((e.w for e in g.edges), np.float64, g.m)
    p = np.fromiter((e.p for e in g.edges), np.float64, g.m)
    return w / c, p.copy()


def unpruned(g: StochasticGraph, c: float = 1.7) -> PrunedGraph:
    """Identity pruning: ``y_e = p_e`` via ``x_e = w_e/c`` (x is +inf at p=1).

    Lets the simulators run plain greedy on the original probabilities.
    """
    w = np.fromiter((e.w for e in g.edges), np.float64, g.m)
    p = np.fromiter((e.p for e in g.edges), np.float64, g.m)
    return PrunedGraph(base=g, y=p.copy(), x=w / c, c=c)


def batch_order(g: StochasticGraph, order) -> "ArrivalOrder":
    """Group parallel edges into consecutive batches.

    Each batch of edges sharing an endpoint pair is placed at the position of
    its earliest member in the input order; within-batch order is preserved.
    Applying the operation twice equals applying it once.
    """
    from .simulate import ArrivalOrder  # local import to avoid a cycle

    seq = list(order.sequence if isinstance(order, ArrivalOrder) else order)
    if sorted(seq) != list(range(g.m)):
        raise ValidationError("order must be a permutation of edge ids")
    groups: dict[tuple[int, int], list[int]] = {}
    first_pos: dict[tuple[int, int], int] = {}
    for pos, e in enumerate(seq):
        key = (g.edges[e].u, g.edges[e].v)
        groups.setdefault(key, []).append(e)
        first_pos.setdefault(key, pos)
    out: list[int] = []
    for key in sorted(first_pos, key=first_pos.get):
        out.extend(groups[key])
    return ArrivalOrder(tuple(out))


def pruned_to_dict(pg: PrunedGraph) -> dict:
    from .graphs import graph_to_dict

    if not (np.all(np.isfinite(pg.x)) and np.all(np.isfinite(pg.y))):
        raise ValidationError("cannot serialize a pruned graph with non-finite x or y")
    doc = graph_to_dict(pg.base)
    doc["x"] = [float(v) for v in pg.x]
    doc["y"] = [float(v) for v in pg.y]
    doc["c"] = pg.c
    return doc


def pruned_from_dict(doc: dict) -> PrunedGraph:
    from .errors import ParseError
    from .graphs import graph_from_dict

    for field in ("x", "y", "c"):
        if field not in doc:
            raise ParseError(f"missing field {field!r}")
    base = graph_from_dict({k: doc[k] for k in ("n_left", "n_right", "edges") if k in doc})
    return PrunedGraph(
        base=base,
        y=np.asarray(doc["y"], dtype=np.float64),
        x=np.asarray(doc["x"], dtype=np.float64),
        c=float(doc["c"]),
    )
